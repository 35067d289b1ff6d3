#pragma once

// Helpers shared by the unit tests and the acceptance runner.

#include "imagetalk/digest.hpp"
#include "imagetalk/domain.hpp"
#include "imagetalk/generation.hpp"
#include "imagetalk/metrics.hpp"
#include "imagetalk/recognition.hpp"
#include "imagetalk/steering.hpp"
#include "imagetalk/store.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace testing {

namespace fs = std::filesystem;
using namespace imagetalk;

inline fs::path fixtures() { return fs::path(IMAGETALK_FIXTURES); }

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag = "imagetalk") {
        static std::atomic<int> counter{0};
        const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
        path_ = fs::temp_directory_path() /
                (tag + "-" + std::to_string(stamp) + "-" + std::to_string(counter++));
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const fs::path& path() const { return path_; }

private:
    fs::path path_;
};

// Session documents of a fixture dataset, in file-name order.
inline std::vector<Session> load_dataset(const fs::path& dir) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.path().extension() == ".json") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::vector<Session> out;
    for (const auto& f : files) out.push_back(load_session_file(f));
    return out;
}

// Recognition, then one kts and one imagetalk_auto story, all with mocks.
inline void run_mock_pipeline(Session& session, const fs::path& dataset_dir, MockRecognizer& recognizer) {
    const SessionStore store(dataset_dir, false);
    const RecognitionBackendConfig config;
    recognize_session(
        session, recognizer, recognizer, [&](const ImageAsset& img) { return store.read_image(img); }, config);
    MockLlm llm;
    const GenerationParams params;
    generate_for_session(llm, session, StoryMode::kts, params);
    generate_for_session(llm, session, StoryMode::imagetalk_auto, params);
}

// Session with `n` in-memory images (payloads are not stored anywhere).
inline Session session_with_images(int n) {
    Session s = create_session();
    for (int i = 1; i <= n; ++i) {
        ImageAsset img;
        img.id = "img" + std::to_string(i);
        img.content_hash = sha256_hex("payload " + std::to_string(i));
        img.source_name = "photo" + std::to_string(i) + ".jpg";
        img.bytes_ref = img.content_hash + ".jpg";
        s.images.push_back(img);
    }
    return s;
}

// Drives a session through random user edits, including invalid ones that
// must be rejected without side effects.
class RandomEditor {
public:
    explicit RandomEditor(std::uint32_t seed) : rng_(seed) {}

    void step(Session& s) {
        static const std::vector<std::string> words = {"park", "dog", "sunny day", "tea", "beach", "grandma",
                                                       "cake", "train", "lake", "market"};
        EditRecord e;
        const int kind = pick(0, 8);
        switch (kind) {
        case 0:
            e.target = EditTarget::caption;
            e.action = EditAction::add;
            e.after = json{{"image_id", image(s)}, {"text", "a photo of " + word(words)}};
            break;
        case 1:
            e.target = EditTarget::caption;
            e.action = pick(0, 1) ? EditAction::modify : EditAction::remove;
            e.target_id = item_id(s, ItemKind::caption);
            if (e.action == EditAction::modify) e.after = json{{"text", "edited " + word(words)}};
            break;
        case 2:
            e.target = EditTarget::object;
            e.action = EditAction::add;
            e.after = json{{"image_id", image(s)}, {"label", word(words)}, {"confidence", pick(50, 100) / 100.0}};
            break;
        case 3:
            e.target = EditTarget::object;
            e.action = pick(0, 1) ? EditAction::modify : EditAction::remove;
            e.target_id = item_id(s, ItemKind::object);
            if (e.action == EditAction::modify) e.after = json{{"label", word(words)}, {"deleted", pick(0, 3) == 0}};
            break;
        case 4:
            e.target = EditTarget::keyword;
            e.action = EditAction::add;
            e.target_id = pick(0, 1) ? "" : std::to_string(pick(0, static_cast<int>(s.keywords.size()) + 1));
            e.after = word(words);
            break;
        case 5:
            e.target = EditTarget::keyword;
            e.action = EditAction::modify;
            e.target_id = std::to_string(pick(0, static_cast<int>(s.keywords.size())));
            e.after = word(words);
            break;
        case 6:
            e.target = EditTarget::keyword;
            e.action = EditAction::remove;
            e.target_id = std::to_string(pick(0, static_cast<int>(s.keywords.size())));
            break;
        case 7: {
            static const std::vector<std::string> styles = {"plain", "colloquial", "vivid", "formal", "custom"};
            static const std::vector<std::string> levels = {"authentic", "augmented", "articulated", "creative"};
            const auto sid = styles[static_cast<std::size_t>(pick(0, 4))];
            e.target = EditTarget::style;
            e.action = EditAction::modify;
            e.after = json{{"style_id", sid},
                           {"custom_directive", sid == "custom" ? json("short and warm") : json(nullptr)},
                           {"acceptance_level", levels[static_cast<std::size_t>(pick(0, 3))]}};
            break;
        }
        default:
            e.target = EditTarget::caption;
            e.action = EditAction::modify;
            e.target_id = "c999";
            e.after = json{{"text", "missing"}};
            break;
        }
        const Session before = s;
        try {
            apply_edit(s, e);
            ++applied_;
        } catch (const Error&) {
            ++rejected_;
            if (!(s == before)) throw std::logic_error("rejected edit changed the session");
        }
    }

    int pick(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
    int applied() const { return applied_; }
    int rejected() const { return rejected_; }

private:
    std::string word(const std::vector<std::string>& words) {
        return words[static_cast<std::size_t>(pick(0, static_cast<int>(words.size()) - 1))];
    }
    std::string image(const Session& s) {
        if (s.images.empty() || pick(0, 9) == 0) return "img-missing";
        return s.images[static_cast<std::size_t>(pick(0, static_cast<int>(s.images.size()) - 1))].id;
    }
    std::string item_id(const Session& s, ItemKind kind) {
        std::vector<std::string> ids;
        if (kind == ItemKind::caption)
            for (const auto& c : s.corpus.captions) ids.push_back(c.id);
        else
            for (const auto& o : s.corpus.objects) ids.push_back(o.id);
        if (ids.empty() || pick(0, 9) == 0) return kind == ItemKind::caption ? "c404" : "o404";
        return ids[static_cast<std::size_t>(pick(0, static_cast<int>(ids.size()) - 1))];
    }

    std::mt19937 rng_;
    int applied_ = 0;
    int rejected_ = 0;
};

} // namespace testing
