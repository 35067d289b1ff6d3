#include "imagetalk/recognition.hpp"

#include "http_json.hpp"
#include "imagetalk/digest.hpp"
#include "imagetalk/store.hpp"
#include "imagetalk/text.hpp"

#include <algorithm>
#include <array>
#include <future>
#include <map>
#include <set>
#include <sstream>

namespace imagetalk {

namespace {

constexpr std::array<std::string_view, 6> kStopWords{"the", "a", "of", "in", "on", "and"};

std::string image_format(const ImageAsset& image) {
    const auto dot = image.bytes_ref.rfind('.');
    return dot == std::string::npos ? std::string("bin") : image.bytes_ref.substr(dot + 1);
}

std::string fmt2(double v) {
    std::ostringstream ss;
    ss.precision(2);
    ss << std::fixed << v;
    return ss.str();
}

DetectedObject parse_detection(const json& d, const ImageAsset& image) {
    if (!d.is_object()) throw Error(ErrorCode::malformed_response, "detection must be an object");
    auto label = d.find("label");
    auto score = d.find("score");
    auto box = d.find("box");
    if (label == d.end() || !label->is_string() || text::trim(label->get<std::string>()).empty())
        throw Error(ErrorCode::malformed_response, "detection is missing a label", "label");
    if (score == d.end() || !score->is_number())
        throw Error(ErrorCode::malformed_response, "detection is missing a score", "score");
    if (box == d.end() || !box->is_array() || box->size() != 4 ||
        !std::all_of(box->begin(), box->end(), [](const json& e) { return e.is_number(); }))
        throw Error(ErrorCode::malformed_response, "detection box must be [x, y, w, h]", "box");

    DetectedObject o;
    o.image_id = image.id;
    o.label = label->get<std::string>();
    o.confidence = score->get<double>();
    o.bbox = {(*box)[0].get<double>(), (*box)[1].get<double>(), (*box)[2].get<double>(), (*box)[3].get<double>()};
    o.origin = Origin::machine;
    try {
        validate(o);
    } catch (const Error& e) {
        throw Error(ErrorCode::malformed_response, std::string("detection out of range: ") + e.what(), e.field());
    }
    return o;
}

} // namespace

void RecognitionBackendConfig::validate() const {
    if (kind == BackendKind::remote && (!endpoint_url || endpoint_url->empty()))
        throw Error(ErrorCode::invalid_argument, "remote recognition backend requires endpoint_url", "endpoint_url");
    if (kind == BackendKind::mock && endpoint_url)
        throw Error(ErrorCode::invalid_argument, "mock recognition backend takes no endpoint_url", "endpoint_url");
    if (timeout_ms <= 0) throw Error(ErrorCode::invalid_argument, "timeout_ms must be positive", "timeout_ms");
    if (max_objects <= 0) throw Error(ErrorCode::invalid_argument, "max_objects must be positive", "max_objects");
    if (!(confidence_floor >= 0.0 && confidence_floor <= 1.0))
        throw Error(ErrorCode::invalid_argument, "confidence_floor must lie in [0,1]", "confidence_floor");
}

// ---------------------------------------------------------------- mock

MockRecognizer::MockRecognizer(json fixture) : fixture_(std::move(fixture)) {
    if (!fixture_.is_object()) throw Error(ErrorCode::schema, "recognition fixture must map content_hash to entries");
}

MockRecognizer MockRecognizer::from_file(const std::filesystem::path& path) {
    try {
        return MockRecognizer(json::parse(read_file(path)));
    } catch (const json::exception& e) {
        throw Error(ErrorCode::schema, "recognition fixture " + path.string() + " is not valid JSON: " + e.what());
    }
}

json MockRecognizer::caption(const ImageAsset& image, std::string_view) {
    auto it = fixture_.find(image.content_hash);
    if (it != fixture_.end() && it->contains("caption")) return json{{"caption", (*it)["caption"]}};
    return json{{"caption", "an image of " + image.content_hash.substr(0, 8)}};
}

json MockRecognizer::detect(const ImageAsset& image, std::string_view, int) {
    auto it = fixture_.find(image.content_hash);
    if (it != fixture_.end() && it->contains("objects")) return json{{"objects", (*it)["objects"]}};
    return json{{"objects", json::array()}};
}

// ---------------------------------------------------------------- remote

RemoteRecognizer::RemoteRecognizer(const RecognitionBackendConfig& config) : config_(config) {
    config_.validate();
    if (config_.kind != BackendKind::remote)
        throw Error(ErrorCode::invalid_argument, "RemoteRecognizer needs a remote config", "kind");
    detail::parse_endpoint(*config_.endpoint_url);
}

json RemoteRecognizer::caption(const ImageAsset& image, std::string_view payload) {
    const json body{{"image", base64_encode(payload)}, {"format", image_format(image)}};
    return detail::post_json(detail::parse_endpoint(*config_.endpoint_url), "/caption", body, config_.timeout_ms);
}

json RemoteRecognizer::detect(const ImageAsset& image, std::string_view payload, int max_objects) {
    const json body{{"image", base64_encode(payload)}, {"format", image_format(image)}, {"max_objects", max_objects}};
    return detail::post_json(detail::parse_endpoint(*config_.endpoint_url), "/detect", body, config_.timeout_ms);
}

// ---------------------------------------------------------------- operations

Caption caption_image(Captioner& backend, const ImageAsset& image, std::string_view payload) {
    const json res = backend.caption(image, payload);
    auto it = res.find("caption");
    if (it == res.end() || !it->is_string() || text::trim(it->get<std::string>()).empty())
        throw Error(ErrorCode::malformed_response, "caption response is missing a caption", "caption");
    Caption c;
    c.image_id = image.id;
    c.text = it->get<std::string>();
    c.origin = Origin::machine;
    return c;
}

std::vector<DetectedObject> detect_objects(Detector& backend, const ImageAsset& image, std::string_view payload,
                                           const RecognitionBackendConfig& config) {
    const json res = backend.detect(image, payload, config.max_objects);
    auto it = res.find("objects");
    if (it == res.end() || !it->is_array())
        throw Error(ErrorCode::malformed_response, "detection response is missing objects", "objects");
    std::vector<DetectedObject> out;
    out.reserve(it->size());
    for (const auto& d : *it) out.push_back(parse_detection(d, image));
    std::stable_sort(out.begin(), out.end(), [](const DetectedObject& a, const DetectedObject& b) {
        if (a.confidence != b.confidence) return a.confidence > b.confidence;
        return a.label < b.label;
    });
    if (out.size() > static_cast<std::size_t>(config.max_objects)) out.resize(static_cast<std::size_t>(config.max_objects));
    return out;
}

ContextCorpus build_context_corpus(std::vector<Caption> captions, std::vector<DetectedObject> objects,
                                   const RecognitionBackendConfig& config, std::span<const ImageAsset> images) {
    ContextCorpus corpus;
    corpus.captions = std::move(captions);

    std::erase_if(objects, [&](const DetectedObject& o) { return o.confidence < config.confidence_floor; });
    // Merge live duplicates; the first occurrence of the max confidence wins.
    std::map<std::pair<std::string, std::string>, std::size_t> best;
    for (std::size_t i = 0; i < objects.size(); ++i) {
        const auto& o = objects[i];
        if (o.deleted) continue;
        auto [it, inserted] = best.try_emplace({o.image_id, o.label}, i);
        if (!inserted && o.confidence > objects[it->second].confidence) it->second = i;
    }
    for (std::size_t i = 0; i < objects.size(); ++i) {
        const auto& o = objects[i];
        if (!o.deleted && best.at({o.image_id, o.label}) != i) continue;
        corpus.objects.push_back(o);
    }

    for (auto& c : corpus.captions)
        if (c.id.empty()) c.id = next_item_id(corpus, ItemKind::caption);
    for (auto& o : corpus.objects)
        if (o.id.empty()) o.id = next_item_id(corpus, ItemKind::object);

    sort_corpus(corpus, images);
    return corpus;
}

std::vector<std::string> content_words(std::string_view s) {
    auto words = text::tokenize(s);
    std::erase_if(words, [](const std::string& w) {
        return std::find(kStopWords.begin(), kStopWords.end(), w) != kStopWords.end();
    });
    return words;
}

std::vector<DecisiveRiskFlag> flag_decisive_risks(const ContextCorpus& corpus, const KeywordList& keywords,
                                                  const RecognitionBackendConfig& config) {
    std::set<std::string> keyword_words;
    for (const auto& k : keywords)
        for (auto& w : content_words(k)) keyword_words.insert(std::move(w));

    auto unreferenced = [&](std::string_view s) {
        const auto words = content_words(s);
        return std::none_of(words.begin(), words.end(), [&](const std::string& w) { return keyword_words.count(w) > 0; });
    };

    std::map<std::string, std::set<std::string>> label_images;
    for (const auto& o : corpus.objects)
        if (!o.deleted) label_images[text::to_lower(o.label)].insert(o.image_id);

    std::vector<DecisiveRiskFlag> flags;
    for (const auto& c : corpus.captions) {
        if (c.deleted) continue;
        if (unreferenced(c.text))
            flags.push_back({{ItemKind::caption, c.id},
                             FlagReason::unreferenced_by_keywords,
                             "no keyword mentions caption '" + c.text + "'"});
    }
    const double low_bar = config.confidence_floor + 0.2;
    for (const auto& o : corpus.objects) {
        if (o.deleted) continue;
        if (o.confidence < low_bar)
            flags.push_back({{ItemKind::object, o.id},
                             FlagReason::low_confidence,
                             "confidence " + fmt2(o.confidence) + " below " + fmt2(low_bar)});
        if (unreferenced(o.label))
            flags.push_back({{ItemKind::object, o.id},
                             FlagReason::unreferenced_by_keywords,
                             "no keyword mentions '" + o.label + "'"});
        if (label_images[text::to_lower(o.label)].size() > 1)
            flags.push_back({{ItemKind::object, o.id},
                             FlagReason::duplicate_label,
                             "label '" + o.label + "' detected on several images"});
    }
    return flags;
}

void refresh_flags(Session& session, const RecognitionBackendConfig& config) {
    session.corpus.flags = flag_decisive_risks(session.corpus, session.keywords, config);
}

std::size_t recognize_session(Session& session, Captioner& captioner, Detector& detector,
                              const PayloadReader& read_payload, const RecognitionBackendConfig& config) {
    config.validate();
    std::vector<const ImageAsset*> pending;
    for (const auto& img : session.images) {
        const bool seen = std::any_of(session.corpus.captions.begin(), session.corpus.captions.end(),
                                      [&](const Caption& c) { return c.image_id == img.id; });
        if (!seen) pending.push_back(&img);
    }

    struct Result {
        Caption caption;
        std::vector<DetectedObject> objects;
    };
    std::vector<std::future<Result>> jobs;
    jobs.reserve(pending.size());
    for (const auto* img : pending) {
        jobs.push_back(std::async(std::launch::async, [&, img] {
            const std::string payload = read_payload(*img);
            return Result{caption_image(captioner, *img, payload), detect_objects(detector, *img, payload, config)};
        }));
    }
    std::vector<Caption> captions;
    std::vector<DetectedObject> objects;
    std::optional<Error> failure;
    for (auto& j : jobs) {
        try {
            auto r = j.get();
            captions.push_back(std::move(r.caption));
            for (auto& o : r.objects) objects.push_back(std::move(o));
        } catch (const Error& e) {
            if (!failure) failure = e;
        }
    }
    if (failure) throw *failure;

    // Build the new items in isolation, then renumber them after the
    // session's existing ids.
    ContextCorpus fresh = build_context_corpus(std::move(captions), std::move(objects), config, session.images);
    ContextCorpus& corpus = session.corpus;
    for (auto& c : fresh.captions) {
        c.id = next_item_id(corpus, ItemKind::caption);
        corpus.captions.push_back(c);
        log_edit(session, EditTarget::caption, EditAction::add, c.id, std::nullopt, json(c));
    }
    for (auto& o : fresh.objects) {
        const bool taken = std::any_of(corpus.objects.begin(), corpus.objects.end(), [&](const DetectedObject& e) {
            return !e.deleted && e.image_id == o.image_id && e.label == o.label;
        });
        if (taken) continue;
        o.id = next_item_id(corpus, ItemKind::object);
        corpus.objects.push_back(o);
        log_edit(session, EditTarget::object, EditAction::add, o.id, std::nullopt, json(o));
    }
    sort_corpus(corpus, session.images);
    refresh_flags(session, config);
    return pending.size();
}

} // namespace imagetalk
