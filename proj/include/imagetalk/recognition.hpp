#pragma once

#include "imagetalk/domain.hpp"

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace imagetalk {

enum class BackendKind { mock, remote };

struct RecognitionBackendConfig {
    BackendKind kind = BackendKind::mock;
    std::optional<std::string> endpoint_url;
    int timeout_ms = 10000;
    int max_objects = 10;
    double confidence_floor = 0.5;

    // endpoint_url iff remote; positive timeout/max_objects; floor in [0,1].
    void validate() const;
};

// Raw backend responses are kept as JSON so mock and remote answers go
// through the same validation.
class Captioner {
public:
    virtual ~Captioner() = default;
    // Returns the response object, expected shape {caption: text}.
    virtual json caption(const ImageAsset& image, std::string_view payload) = 0;
};

class Detector {
public:
    virtual ~Detector() = default;
    // Returns the response object, expected shape {objects: [{label, score, box}]}.
    virtual json detect(const ImageAsset& image, std::string_view payload, int max_objects) = 0;
};

// content_hash -> {caption, objects}. Unknown hashes get a synthetic caption
// "an image of <first 8 hash chars>" and no objects.
class MockRecognizer final : public Captioner, public Detector {
public:
    MockRecognizer() = default;
    explicit MockRecognizer(json fixture);

    static MockRecognizer from_file(const std::filesystem::path& path);

    json caption(const ImageAsset& image, std::string_view payload) override;
    json detect(const ImageAsset& image, std::string_view payload, int max_objects) override;

private:
    json fixture_ = json::object();
};

// One HTTP call per image per model:
//   POST {endpoint}/caption {image: base64, format} -> {caption}
//   POST {endpoint}/detect  {image: base64, format, max_objects} -> {objects}
class RemoteRecognizer final : public Captioner, public Detector {
public:
    explicit RemoteRecognizer(const RecognitionBackendConfig& config);

    json caption(const ImageAsset& image, std::string_view payload) override;
    json detect(const ImageAsset& image, std::string_view payload, int max_objects) override;

private:
    RecognitionBackendConfig config_;
};

// Returns a machine-origin caption bound to image.id (id left empty).
Caption caption_image(Captioner& backend, const ImageAsset& image, std::string_view payload);

// At most config.max_objects, sorted by descending confidence (ties by label).
// Scores outside [0,1], missing fields and invalid boxes are malformed responses.
std::vector<DetectedObject> detect_objects(Detector& backend, const ImageAsset& image, std::string_view payload,
                                           const RecognitionBackendConfig& config);

// Drops objects below the confidence floor, merges duplicate (image, label)
// pairs keeping the highest confidence, assigns ids to items that have none,
// and applies the canonical corpus order. `images` gives the caption order;
// when empty, captions keep their input order.
ContextCorpus build_context_corpus(std::vector<Caption> captions, std::vector<DetectedObject> objects,
                                   const RecognitionBackendConfig& config, std::span<const ImageAsset> images = {});

// Advisory only; does not touch the corpus.
std::vector<DecisiveRiskFlag> flag_decisive_risks(const ContextCorpus& corpus, const KeywordList& keywords,
                                                  const RecognitionBackendConfig& config);

// Content words used by the keyword-overlap rule: lowercase, punctuation
// stripped, stop words removed.
std::vector<std::string> content_words(std::string_view s);

using PayloadReader = std::function<std::string(const ImageAsset&)>;

// Runs captioning and detection on every image that has no caption yet
// (deleted captions count), merges the results into the session corpus,
// logs one `add` edit per new item and refreshes flags. All backend calls
// complete before the session is touched, so a failure leaves it unchanged.
// Returns the number of images processed.
std::size_t recognize_session(Session& session, Captioner& captioner, Detector& detector,
                              const PayloadReader& read_payload, const RecognitionBackendConfig& config);

void refresh_flags(Session& session, const RecognitionBackendConfig& config);

} // namespace imagetalk
