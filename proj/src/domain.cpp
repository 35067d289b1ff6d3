#include "imagetalk/domain.hpp"

#include "imagetalk/text.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <ctime>
#include <map>
#include <random>
#include <set>
#include <utility>

namespace imagetalk {

namespace {

template <typename E, std::size_t N>
struct EnumTable {
    std::array<std::pair<E, std::string_view>, N> entries;

    std::string_view name(E v) const {
        for (const auto& [e, n] : entries)
            if (e == v) return n;
        return "?";
    }
    E parse(std::string_view n, std::string_view field) const {
        for (const auto& [e, s] : entries)
            if (s == n) return e;
        throw Error(ErrorCode::schema, "unknown value '" + std::string(n) + "'", std::string(field));
    }
};

constexpr EnumTable<Origin, 2> kOrigin{{{{Origin::machine, "machine"}, {Origin::user_edited, "user_edited"}}}};
constexpr EnumTable<StyleId, 5> kStyle{{{{StyleId::plain, "plain"},
                                         {StyleId::colloquial, "colloquial"},
                                         {StyleId::vivid, "vivid"},
                                         {StyleId::formal, "formal"},
                                         {StyleId::custom, "custom"}}}};
constexpr EnumTable<AcceptanceLevel, 4> kAcceptance{{{{AcceptanceLevel::authentic, "authentic"},
                                                      {AcceptanceLevel::augmented, "augmented"},
                                                      {AcceptanceLevel::articulated, "articulated"},
                                                      {AcceptanceLevel::creative, "creative"}}}};
constexpr EnumTable<StoryMode, 3> kMode{{{{StoryMode::kts, "kts"},
                                          {StoryMode::imagetalk_auto, "imagetalk_auto"},
                                          {StoryMode::imagetalk_steered, "imagetalk_steered"}}}};
constexpr EnumTable<EditTarget, 5> kTarget{{{{EditTarget::caption, "caption"},
                                             {EditTarget::object, "object"},
                                             {EditTarget::keyword, "keyword"},
                                             {EditTarget::style, "style"},
                                             {EditTarget::segment, "segment"}}}};
constexpr EnumTable<EditAction, 3> kAction{
    {{{EditAction::add, "add"}, {EditAction::remove, "remove"}, {EditAction::modify, "modify"}}}};
constexpr EnumTable<FlagReason, 3> kReason{{{{FlagReason::low_confidence, "low_confidence"},
                                             {FlagReason::duplicate_label, "duplicate_label"},
                                             {FlagReason::unreferenced_by_keywords, "unreferenced_by_keywords"}}}};
constexpr EnumTable<ItemKind, 2> kKind{{{{ItemKind::caption, "caption"}, {ItemKind::object, "object"}}}};

template <typename E>
constexpr const auto& table_for() {
    if constexpr (std::is_same_v<E, Origin>) return kOrigin;
    else if constexpr (std::is_same_v<E, StyleId>) return kStyle;
    else if constexpr (std::is_same_v<E, AcceptanceLevel>) return kAcceptance;
    else if constexpr (std::is_same_v<E, StoryMode>) return kMode;
    else if constexpr (std::is_same_v<E, EditTarget>) return kTarget;
    else if constexpr (std::is_same_v<E, EditAction>) return kAction;
    else if constexpr (std::is_same_v<E, FlagReason>) return kReason;
    else return kKind;
}

Error invalid(const std::string& field, const std::string& msg) {
    return Error(ErrorCode::invalid_argument, field + ": " + msg, field);
}

// Strict field access: missing field or wrong JSON type is a schema error.
const json& field(const json& j, const char* name) {
    if (!j.is_object()) throw Error(ErrorCode::schema, "expected an object", name);
    auto it = j.find(name);
    if (it == j.end()) throw Error(ErrorCode::schema, std::string("missing field '") + name + "'", name);
    return *it;
}

std::string get_string(const json& j, const char* name) {
    const auto& v = field(j, name);
    if (!v.is_string()) throw Error(ErrorCode::schema, std::string("field '") + name + "' must be a string", name);
    return v.get<std::string>();
}

std::optional<std::string> get_opt_string(const json& j, const char* name) {
    auto it = j.find(name);
    if (it == j.end() || it->is_null()) return std::nullopt;
    if (!it->is_string()) throw Error(ErrorCode::schema, std::string("field '") + name + "' must be a string", name);
    return it->get<std::string>();
}

double get_number(const json& j, const char* name) {
    const auto& v = field(j, name);
    if (!v.is_number()) throw Error(ErrorCode::schema, std::string("field '") + name + "' must be a number", name);
    return v.get<double>();
}

bool get_bool(const json& j, const char* name) {
    const auto& v = field(j, name);
    if (!v.is_boolean()) throw Error(ErrorCode::schema, std::string("field '") + name + "' must be a boolean", name);
    return v.get<bool>();
}

template <typename E>
E get_enum(const json& j, const char* name) {
    return parse_enum<E>(get_string(j, name), name);
}

template <typename T>
std::vector<T> get_array(const json& j, const char* name) {
    const auto& v = field(j, name);
    if (!v.is_array()) throw Error(ErrorCode::schema, std::string("field '") + name + "' must be an array", name);
    std::vector<T> out;
    out.reserve(v.size());
    for (const auto& e : v) out.push_back(e.get<T>());
    return out;
}

bool in_unit(double v) { return v >= 0.0 && v <= 1.0; }

std::size_t id_number(std::string_view id, char prefix) {
    if (id.size() < 2 || id[0] != prefix) return 0;
    std::size_t n = 0;
    for (char c : id.substr(1)) {
        if (c < '0' || c > '9') return 0;
        n = n * 10 + static_cast<std::size_t>(c - '0');
    }
    return n;
}

} // namespace

#define IMAGETALK_ENUM_STRING(E) \
    std::string_view to_string(E v) { return table_for<E>().name(v); } \
    template <> E parse_enum<E>(std::string_view name, std::string_view field) { \
        return table_for<E>().parse(name, field); \
    }

IMAGETALK_ENUM_STRING(Origin)
IMAGETALK_ENUM_STRING(StyleId)
IMAGETALK_ENUM_STRING(AcceptanceLevel)
IMAGETALK_ENUM_STRING(StoryMode)
IMAGETALK_ENUM_STRING(EditTarget)
IMAGETALK_ENUM_STRING(EditAction)
IMAGETALK_ENUM_STRING(FlagReason)
IMAGETALK_ENUM_STRING(ItemKind)

#undef IMAGETALK_ENUM_STRING

// ---------------------------------------------------------------- invariants

void validate(const Caption& c) {
    if (c.image_id.empty()) throw invalid("image_id", "caption must reference an image");
    if (!c.deleted && text::trim(c.text).empty()) throw invalid("text", "caption text must be non-empty");
}

void validate(const DetectedObject& o) {
    if (o.image_id.empty()) throw invalid("image_id", "object must reference an image");
    if (text::trim(o.label).empty()) throw invalid("label", "object label must be non-empty");
    if (!in_unit(o.confidence)) throw invalid("confidence", "confidence must lie in [0,1]");
    const auto& b = o.bbox;
    if (!in_unit(b.x) || !in_unit(b.y) || !in_unit(b.width) || !in_unit(b.height))
        throw invalid("bbox", "bounding box coordinates must lie in [0,1]");
    if (b.width <= 0 || b.height <= 0) throw invalid("bbox", "bounding box width and height must be positive");
}

void validate(const LanguageStyle& s) {
    const bool has_directive = s.custom_directive && !text::trim(*s.custom_directive).empty();
    if (s.style_id == StyleId::custom && !has_directive)
        throw invalid("custom_directive", "custom style requires a custom_directive");
    if (s.style_id != StyleId::custom && s.custom_directive)
        throw invalid("custom_directive", "custom_directive is only allowed with the custom style");
}

void validate_keyword(std::string_view keyword) {
    if (text::trim(keyword).empty()) throw invalid("keywords", "keyword must not be empty or whitespace");
}

void validate(const Session& s) {
    if (s.id.empty()) throw invalid("id", "session id must be non-empty");

    std::set<std::string> image_ids;
    for (const auto& img : s.images)
        if (!image_ids.insert(img.id).second) throw invalid("images", "duplicate image id " + img.id);

    std::set<std::string> item_ids;
    for (const auto& c : s.corpus.captions) {
        validate(c);
        if (!image_ids.count(c.image_id)) throw invalid("captions", "caption references unknown image " + c.image_id);
        if (!item_ids.insert(c.id).second) throw invalid("captions", "duplicate item id " + c.id);
    }
    std::set<std::pair<std::string, std::string>> live_labels;
    for (const auto& o : s.corpus.objects) {
        validate(o);
        if (!image_ids.count(o.image_id)) throw invalid("objects", "object references unknown image " + o.image_id);
        if (!item_ids.insert(o.id).second) throw invalid("objects", "duplicate item id " + o.id);
        if (!o.deleted && !live_labels.insert({o.image_id, o.label}).second)
            throw invalid("objects", "duplicate label '" + o.label + "' on image " + o.image_id);
    }
    for (const auto& f : s.corpus.flags)
        if (!item_ids.count(f.target.id)) throw invalid("flags", "flag references unknown item " + f.target.id);

    for (const auto& k : s.keywords) validate_keyword(k);
    validate(s.style);

    int prev = 0;
    for (const auto& st : s.stories) {
        if (st.version <= prev) throw invalid("stories", "story versions must be strictly increasing");
        prev = st.version;
        if (st.parent_version && *st.parent_version >= st.version)
            throw invalid("parent_version", "parent_version must precede version");
        std::string joined;
        for (std::size_t i = 0; i < st.segments.size(); ++i) {
            if (st.segments[i].index != i) throw invalid("segments", "segment indices must be contiguous from 0");
            joined += st.segments[i].text + st.segments[i].trailing_separator;
        }
        if (joined != st.text) throw invalid("segments", "segments do not reconstruct the story text");
    }

    std::uint64_t seq = 0;
    for (const auto& e : s.edits) {
        if (e.seq != seq + 1) throw invalid("edits", "edit seq values must be gapless and increasing");
        seq = e.seq;
    }
}

// ---------------------------------------------------------------- operations

std::string new_session_id() {
    static thread_local std::mt19937_64 rng{std::random_device{}()};
    static constexpr char hex[] = "0123456789abcdef";
    std::string id = "s-";
    for (int i = 0; i < 2; ++i) {
        auto v = rng();
        for (int k = 0; k < 16; ++k, v >>= 4) id.push_back(hex[v & 0xf]);
    }
    return id;
}

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

Session create_session() {
    Session s;
    s.id = new_session_id();
    return s;
}

int latest_version(const Session& session) {
    return session.stories.empty() ? 0 : session.stories.back().version;
}

void append_story_version(Session& session, StoryVersion story) {
    const int expected = latest_version(session) + 1;
    if (story.version != expected) {
        throw Error(ErrorCode::version_conflict, "expected story version " + std::to_string(expected) + ", got " +
                                                     std::to_string(story.version),
                    "version");
    }
    if (story.parent_version && (*story.parent_version >= story.version || !find_story(session, *story.parent_version)))
        throw Error(ErrorCode::version_conflict, "parent_version does not name an existing earlier version",
                    "parent_version");
    session.stories.push_back(std::move(story));
}

const StoryVersion* find_story(const Session& session, int version) {
    for (const auto& s : session.stories)
        if (s.version == version) return &s;
    return nullptr;
}

const StoryVersion* latest_story(const Session& session, std::optional<StoryMode> mode) {
    for (auto it = session.stories.rbegin(); it != session.stories.rend(); ++it)
        if (!mode || it->mode == *mode) return &*it;
    return nullptr;
}

const ImageAsset* find_image(const Session& session, std::string_view image_id) {
    for (const auto& i : session.images)
        if (i.id == image_id) return &i;
    return nullptr;
}

Caption* find_caption(ContextCorpus& corpus, std::string_view id) {
    for (auto& c : corpus.captions)
        if (c.id == id) return &c;
    return nullptr;
}

DetectedObject* find_object(ContextCorpus& corpus, std::string_view id) {
    for (auto& o : corpus.objects)
        if (o.id == id) return &o;
    return nullptr;
}

const EditRecord& log_edit(Session& session, EditTarget target, EditAction action, std::string target_id,
                           std::optional<json> before, std::optional<json> after) {
    EditRecord r;
    r.seq = session.edits.empty() ? 1 : session.edits.back().seq + 1;
    r.target = target;
    r.action = action;
    r.target_id = std::move(target_id);
    r.before = std::move(before);
    r.after = std::move(after);
    r.timestamp = utc_timestamp();
    session.edits.push_back(std::move(r));
    return session.edits.back();
}

std::string next_item_id(const ContextCorpus& corpus, ItemKind kind) {
    const char prefix = kind == ItemKind::caption ? 'c' : 'o';
    std::size_t max = 0;
    if (kind == ItemKind::caption) {
        for (const auto& c : corpus.captions) max = std::max(max, id_number(c.id, prefix));
    } else {
        for (const auto& o : corpus.objects) max = std::max(max, id_number(o.id, prefix));
    }
    return std::string(1, prefix) + std::to_string(max + 1);
}

void sort_corpus(ContextCorpus& corpus, std::span<const ImageAsset> images) {
    std::map<std::string, std::size_t, std::less<>> order;
    for (std::size_t i = 0; i < images.size(); ++i) order.emplace(images[i].id, i);
    auto rank = [&](const std::string& id) {
        auto it = order.find(id);
        return it == order.end() ? images.size() : it->second;
    };
    std::stable_sort(corpus.captions.begin(), corpus.captions.end(),
                     [&](const Caption& a, const Caption& b) { return rank(a.image_id) < rank(b.image_id); });
    std::stable_sort(corpus.objects.begin(), corpus.objects.end(),
                     [&](const DetectedObject& a, const DetectedObject& b) {
                         if (a.confidence != b.confidence) return a.confidence > b.confidence;
                         if (a.label != b.label) return a.label < b.label;
                         return rank(a.image_id) < rank(b.image_id);
                     });
}

// ---------------------------------------------------------------- json

void to_json(json& j, const ImageAsset& v) {
    j = json{{"id", v.id}, {"source_name", v.source_name}, {"bytes_ref", v.bytes_ref}, {"content_hash", v.content_hash}};
}
void from_json(const json& j, ImageAsset& v) {
    v.id = get_string(j, "id");
    v.source_name = get_string(j, "source_name");
    v.bytes_ref = get_string(j, "bytes_ref");
    v.content_hash = get_string(j, "content_hash");
}

void to_json(json& j, const BoundingBox& v) { j = json::array({v.x, v.y, v.width, v.height}); }
void from_json(const json& j, BoundingBox& v) {
    if (!j.is_array() || j.size() != 4 || !std::all_of(j.begin(), j.end(), [](const json& e) { return e.is_number(); }))
        throw Error(ErrorCode::schema, "bbox must be an array of four numbers", "bbox");
    v = {j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
}

void to_json(json& j, const Caption& v) {
    j = json{{"id", v.id}, {"image_id", v.image_id}, {"text", v.text}, {"origin", to_string(v.origin)}, {"deleted", v.deleted}};
}
void from_json(const json& j, Caption& v) {
    v.id = get_string(j, "id");
    v.image_id = get_string(j, "image_id");
    v.text = get_string(j, "text");
    v.origin = get_enum<Origin>(j, "origin");
    v.deleted = get_bool(j, "deleted");
}

void to_json(json& j, const DetectedObject& v) {
    j = json{{"id", v.id},
             {"image_id", v.image_id},
             {"label", v.label},
             {"confidence", v.confidence},
             {"bbox", v.bbox},
             {"origin", to_string(v.origin)},
             {"deleted", v.deleted}};
}
void from_json(const json& j, DetectedObject& v) {
    v.id = get_string(j, "id");
    v.image_id = get_string(j, "image_id");
    v.label = get_string(j, "label");
    v.confidence = get_number(j, "confidence");
    v.bbox = field(j, "bbox").get<BoundingBox>();
    v.origin = get_enum<Origin>(j, "origin");
    v.deleted = get_bool(j, "deleted");
}

void to_json(json& j, const ItemRef& v) { j = json{{"kind", to_string(v.kind)}, {"id", v.id}}; }
void from_json(const json& j, ItemRef& v) {
    v.kind = get_enum<ItemKind>(j, "kind");
    v.id = get_string(j, "id");
}

void to_json(json& j, const DecisiveRiskFlag& v) {
    j = json{{"target", v.target}, {"reason", to_string(v.reason)}, {"detail", v.detail}};
}
void from_json(const json& j, DecisiveRiskFlag& v) {
    v.target = field(j, "target").get<ItemRef>();
    v.reason = get_enum<FlagReason>(j, "reason");
    v.detail = get_string(j, "detail");
}

void to_json(json& j, const ContextCorpus& v) {
    j = json{{"captions", v.captions}, {"objects", v.objects}, {"flags", v.flags}};
}
void from_json(const json& j, ContextCorpus& v) {
    v.captions = get_array<Caption>(j, "captions");
    v.objects = get_array<DetectedObject>(j, "objects");
    v.flags = get_array<DecisiveRiskFlag>(j, "flags");
}

void to_json(json& j, const LanguageStyle& v) {
    j = json{{"style_id", to_string(v.style_id)},
             {"custom_directive", v.custom_directive ? json(*v.custom_directive) : json(nullptr)},
             {"acceptance_level", to_string(v.acceptance_level)}};
}
void from_json(const json& j, LanguageStyle& v) {
    v.style_id = get_enum<StyleId>(j, "style_id");
    v.custom_directive = get_opt_string(j, "custom_directive");
    v.acceptance_level = get_enum<AcceptanceLevel>(j, "acceptance_level");
}

void to_json(json& j, const Segment& v) {
    j = json{{"index", v.index}, {"text", v.text}, {"trailing_separator", v.trailing_separator}};
}
void from_json(const json& j, Segment& v) {
    const auto& idx = field(j, "index");
    if (!idx.is_number_unsigned() && !(idx.is_number_integer() && idx.get<long long>() >= 0))
        throw Error(ErrorCode::schema, "segment index must be a non-negative integer", "index");
    v.index = idx.get<std::size_t>();
    v.text = get_string(j, "text");
    v.trailing_separator = get_string(j, "trailing_separator");
}

void to_json(json& j, const StoryVersion& v) {
    j = json{{"version", v.version},
             {"text", v.text},
             {"segments", v.segments},
             {"mode", to_string(v.mode)},
             {"prompt_hash", v.prompt_hash},
             {"parent_version", v.parent_version ? json(*v.parent_version) : json(nullptr)},
             {"created_at", v.created_at}};
}
void from_json(const json& j, StoryVersion& v) {
    const auto& ver = field(j, "version");
    if (!ver.is_number_integer()) throw Error(ErrorCode::schema, "version must be an integer", "version");
    v.version = ver.get<int>();
    v.text = get_string(j, "text");
    v.segments = get_array<Segment>(j, "segments");
    v.mode = get_enum<StoryMode>(j, "mode");
    v.prompt_hash = get_string(j, "prompt_hash");
    auto it = j.find("parent_version");
    if (it == j.end() || it->is_null()) {
        v.parent_version.reset();
    } else if (it->is_number_integer()) {
        v.parent_version = it->get<int>();
    } else {
        throw Error(ErrorCode::schema, "parent_version must be an integer or null", "parent_version");
    }
    v.created_at = get_string(j, "created_at");
}

void to_json(json& j, const EditRecord& v) {
    j = json{{"seq", v.seq},
             {"target", to_string(v.target)},
             {"action", to_string(v.action)},
             {"target_id", v.target_id},
             {"before", v.before ? *v.before : json(nullptr)},
             {"after", v.after ? *v.after : json(nullptr)},
             {"timestamp", v.timestamp}};
}
void from_json(const json& j, EditRecord& v) {
    const auto& seq = field(j, "seq");
    if (!seq.is_number_unsigned()) throw Error(ErrorCode::schema, "seq must be a positive integer", "seq");
    v.seq = seq.get<std::uint64_t>();
    v.target = get_enum<EditTarget>(j, "target");
    v.action = get_enum<EditAction>(j, "action");
    v.target_id = get_string(j, "target_id");
    auto opt = [&](const char* name) -> std::optional<json> {
        auto it = j.find(name);
        if (it == j.end() || it->is_null()) return std::nullopt;
        return *it;
    };
    v.before = opt("before");
    v.after = opt("after");
    v.timestamp = get_string(j, "timestamp");
}

void to_json(json& j, const Session& v) {
    j = json{{"id", v.id},
             {"images", v.images},
             {"corpus", v.corpus},
             {"keywords", v.keywords},
             {"style", v.style},
             {"reference_story", v.reference_story ? json(*v.reference_story) : json(nullptr)},
             {"stories", v.stories},
             {"edits", v.edits}};
}
void from_json(const json& j, Session& v) {
    v.id = get_string(j, "id");
    v.images = get_array<ImageAsset>(j, "images");
    v.corpus = field(j, "corpus").get<ContextCorpus>();
    const auto& kw = field(j, "keywords");
    if (!kw.is_array() || !std::all_of(kw.begin(), kw.end(), [](const json& e) { return e.is_string(); }))
        throw Error(ErrorCode::schema, "keywords must be an array of strings", "keywords");
    v.keywords = kw.get<KeywordList>();
    v.style = field(j, "style").get<LanguageStyle>();
    v.reference_story = get_opt_string(j, "reference_story");
    v.stories = get_array<StoryVersion>(j, "stories");
    v.edits = get_array<EditRecord>(j, "edits");
}

std::string serialize_session(const Session& s) {
    json j = s;
    json doc = json::object();
    doc["schema_version"] = kSessionSchemaVersion;
    for (auto& [k, val] : j.items()) doc[k] = val;
    return doc.dump(2) + "\n";
}

Session parse_session(std::string_view document) {
    json doc;
    try {
        doc = json::parse(document);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::schema, std::string("session document is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw Error(ErrorCode::schema, "session document must be an object");
    const auto& ver = field(doc, "schema_version");
    if (!ver.is_number_integer() || ver.get<int>() != kSessionSchemaVersion)
        throw Error(ErrorCode::schema, "unsupported schema_version", "schema_version");
    Session s;
    try {
        s = doc.get<Session>();
        validate(s);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::schema, std::string("session document malformed: ") + e.what());
    } catch (const Error& e) {
        if (e.code() == ErrorCode::schema) throw;
        throw Error(ErrorCode::schema, e.what(), e.field());
    }
    return s;
}

} // namespace imagetalk
