#pragma once

#include "imagetalk/errors.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace imagetalk {

using json = nlohmann::json;

enum class Origin { machine, user_edited };
enum class StyleId { plain, colloquial, vivid, formal, custom };
enum class AcceptanceLevel { authentic, augmented, articulated, creative };
enum class StoryMode { kts, imagetalk_auto, imagetalk_steered };
enum class EditTarget { caption, object, keyword, style, segment };
enum class EditAction { add, remove, modify };
enum class FlagReason { low_confidence, duplicate_label, unreferenced_by_keywords };
enum class ItemKind { caption, object };

std::string_view to_string(Origin v);
std::string_view to_string(StyleId v);
std::string_view to_string(AcceptanceLevel v);
std::string_view to_string(StoryMode v);
std::string_view to_string(EditTarget v);
std::string_view to_string(EditAction v);
std::string_view to_string(FlagReason v);
std::string_view to_string(ItemKind v);

// Parsers throw Error(schema) naming `field` for unknown names.
template <typename E>
E parse_enum(std::string_view name, std::string_view field = {});
template <> Origin parse_enum<Origin>(std::string_view, std::string_view);
template <> StyleId parse_enum<StyleId>(std::string_view, std::string_view);
template <> AcceptanceLevel parse_enum<AcceptanceLevel>(std::string_view, std::string_view);
template <> StoryMode parse_enum<StoryMode>(std::string_view, std::string_view);
template <> EditTarget parse_enum<EditTarget>(std::string_view, std::string_view);
template <> EditAction parse_enum<EditAction>(std::string_view, std::string_view);
template <> FlagReason parse_enum<FlagReason>(std::string_view, std::string_view);
template <> ItemKind parse_enum<ItemKind>(std::string_view, std::string_view);

struct ImageAsset {
    std::string id;
    std::string source_name;
    std::string bytes_ref;     // file name of the stored payload, "<content_hash>.<ext>"
    std::string content_hash;  // sha256 hex of the payload

    bool operator==(const ImageAsset&) const = default;
};

// Normalized image coordinates.
struct BoundingBox {
    double x = 0, y = 0, width = 0, height = 0;

    bool operator==(const BoundingBox&) const = default;
};

struct Caption {
    std::string id;
    std::string image_id;
    std::string text;
    Origin origin = Origin::machine;
    bool deleted = false;

    bool operator==(const Caption&) const = default;
};

struct DetectedObject {
    std::string id;
    std::string image_id;
    std::string label;
    double confidence = 0;
    BoundingBox bbox;
    Origin origin = Origin::machine;
    bool deleted = false;

    bool operator==(const DetectedObject&) const = default;
};

struct ItemRef {
    ItemKind kind = ItemKind::caption;
    std::string id;

    bool operator==(const ItemRef&) const = default;
};

struct DecisiveRiskFlag {
    ItemRef target;
    FlagReason reason = FlagReason::low_confidence;
    std::string detail;

    bool operator==(const DecisiveRiskFlag&) const = default;
};

struct ContextCorpus {
    std::vector<Caption> captions;
    std::vector<DetectedObject> objects;
    std::vector<DecisiveRiskFlag> flags;

    bool operator==(const ContextCorpus&) const = default;
};

using KeywordList = std::vector<std::string>;

struct LanguageStyle {
    StyleId style_id = StyleId::plain;
    std::optional<std::string> custom_directive;
    AcceptanceLevel acceptance_level = AcceptanceLevel::authentic;

    bool operator==(const LanguageStyle&) const = default;
};

struct Segment {
    std::size_t index = 0;
    std::string text;
    std::string trailing_separator;

    bool operator==(const Segment&) const = default;
};

struct StoryVersion {
    int version = 0;
    std::string text;
    std::vector<Segment> segments;
    StoryMode mode = StoryMode::kts;
    std::string prompt_hash;
    std::optional<int> parent_version;
    std::string created_at;

    bool operator==(const StoryVersion&) const = default;
};

struct EditRecord {
    std::uint64_t seq = 0;
    EditTarget target = EditTarget::caption;
    EditAction action = EditAction::modify;
    // Caption/object id, keyword index, or "<version>:<index>" for segments.
    std::string target_id;
    std::optional<json> before;
    std::optional<json> after;
    std::string timestamp;

    bool operator==(const EditRecord&) const = default;
};

struct Session {
    std::string id;
    std::vector<ImageAsset> images;
    ContextCorpus corpus;
    KeywordList keywords;
    LanguageStyle style;
    std::optional<std::string> reference_story;
    std::vector<StoryVersion> stories;
    std::vector<EditRecord> edits;

    bool operator==(const Session&) const = default;
};

inline constexpr int kSessionSchemaVersion = 1;

// --- invariant checks (throw Error(invalid_argument) naming the field) ---
void validate(const Caption& c);
void validate(const DetectedObject& o);
void validate(const LanguageStyle& s);
void validate_keyword(std::string_view keyword);
void validate(const Session& s);

// --- operations ---
Session create_session();
std::string new_session_id();
std::string utc_timestamp();

// Requires story.version == latest + 1 (or 1); throws version_conflict.
void append_story_version(Session& session, StoryVersion story);

int latest_version(const Session& session);  // 0 when no stories
const StoryVersion* find_story(const Session& session, int version);
const StoryVersion* latest_story(const Session& session, std::optional<StoryMode> mode = {});
const ImageAsset* find_image(const Session& session, std::string_view image_id);
Caption* find_caption(ContextCorpus& corpus, std::string_view id);
DetectedObject* find_object(ContextCorpus& corpus, std::string_view id);

// Appends a record with the next seq and the current timestamp.
const EditRecord& log_edit(Session& session, EditTarget target, EditAction action,
                           std::string target_id, std::optional<json> before,
                           std::optional<json> after);

// Next unused item id ("c<n>" / "o<n>") in the corpus, deleted items included.
std::string next_item_id(const ContextCorpus& corpus, ItemKind kind);

// Canonical corpus order: captions by image order (stable), objects by
// descending confidence, then label, then image order. Images missing from
// `images` sort last.
void sort_corpus(ContextCorpus& corpus, std::span<const ImageAsset> images);

// --- serialization ---
void to_json(json& j, const ImageAsset& v);
void from_json(const json& j, ImageAsset& v);
void to_json(json& j, const BoundingBox& v);
void from_json(const json& j, BoundingBox& v);
void to_json(json& j, const Caption& v);
void from_json(const json& j, Caption& v);
void to_json(json& j, const DetectedObject& v);
void from_json(const json& j, DetectedObject& v);
void to_json(json& j, const ItemRef& v);
void from_json(const json& j, ItemRef& v);
void to_json(json& j, const DecisiveRiskFlag& v);
void from_json(const json& j, DecisiveRiskFlag& v);
void to_json(json& j, const ContextCorpus& v);
void from_json(const json& j, ContextCorpus& v);
void to_json(json& j, const LanguageStyle& v);
void from_json(const json& j, LanguageStyle& v);
void to_json(json& j, const Segment& v);
void from_json(const json& j, Segment& v);
void to_json(json& j, const StoryVersion& v);
void from_json(const json& j, StoryVersion& v);
void to_json(json& j, const EditRecord& v);
void from_json(const json& j, EditRecord& v);
void to_json(json& j, const Session& v);
void from_json(const json& j, Session& v);

// Session document with `schema_version` at top level.
std::string serialize_session(const Session& s);
// Throws Error(schema) when the document does not parse or validate.
Session parse_session(std::string_view document);

} // namespace imagetalk
