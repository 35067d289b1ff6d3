#include "imagetalk/steering.hpp"

#include "imagetalk/text.hpp"

#include <algorithm>
#include <charconv>

namespace imagetalk {

namespace {

Error bad_value(const std::string& field, const std::string& msg) {
    return Error(ErrorCode::invalid_argument, msg, field);
}

std::size_t parse_index(std::string_view s, std::size_t limit, const char* what) {
    std::size_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || p != s.data() + s.size() || v >= limit)
        throw Error(ErrorCode::unknown_target, std::string("no ") + what + " at index '" + std::string(s) + "'",
                    "target_id");
    return v;
}

const json& object_value(const EditRecord& e) {
    if (!e.after || !e.after->is_object()) throw bad_value("after", "edit value must be an object");
    return *e.after;
}

std::string string_field(const json& v, const char* name) {
    auto it = v.find(name);
    if (it == v.end() || !it->is_string()) throw bad_value(name, std::string(name) + " must be a string");
    return it->get<std::string>();
}

template <typename T>
bool optional_field(const json& v, const char* name, T& out) {
    auto it = v.find(name);
    if (it == v.end()) return false;
    try {
        out = it->get<T>();
    } catch (const json::exception&) {
        throw bad_value(name, std::string(name) + " has the wrong type");
    } catch (const Error& e) {
        throw bad_value(name, e.what());
    }
    return true;
}

void check_image(std::span<const ImageAsset> images, const std::string& image_id) {
    if (std::none_of(images.begin(), images.end(), [&](const ImageAsset& i) { return i.id == image_id; }))
        throw bad_value("image_id", "no image " + image_id + " in this session");
}

void check_unique_label(const ContextCorpus& corpus, const DetectedObject& o) {
    if (o.deleted) return;
    for (const auto& e : corpus.objects)
        if (e.id != o.id && !e.deleted && e.image_id == o.image_id && e.label == o.label)
            throw bad_value("label", "image " + o.image_id + " already has an object labelled '" + o.label + "'");
}

std::string keyword_value(const EditRecord& e) {
    if (!e.after || !e.after->is_string()) throw bad_value("after", "keyword value must be a string");
    auto k = e.after->get<std::string>();
    try {
        validate_keyword(k);
    } catch (const Error& err) {
        throw bad_value("keywords", err.what());
    }
    return k;
}

// The replay step proper: logged records carry full after-values.
void apply_record(ContextCorpus& corpus, KeywordList& keywords, LanguageStyle& style, const EditRecord& r,
                  std::span<const ImageAsset> images) {
    auto need_after = [&]() -> const json& {
        if (!r.after) throw Error(ErrorCode::schema, "edit " + std::to_string(r.seq) + " has no after-value");
        return *r.after;
    };
    switch (r.target) {
    case EditTarget::caption: {
        auto c = need_after().get<Caption>();
        if (r.action == EditAction::add) {
            corpus.captions.push_back(std::move(c));
        } else {
            auto* cur = find_caption(corpus, r.target_id);
            if (!cur) throw Error(ErrorCode::schema, "edit " + std::to_string(r.seq) + " targets unknown caption");
            *cur = std::move(c);
        }
        sort_corpus(corpus, images);
        break;
    }
    case EditTarget::object: {
        auto o = need_after().get<DetectedObject>();
        if (r.action == EditAction::add) {
            corpus.objects.push_back(std::move(o));
        } else {
            auto* cur = find_object(corpus, r.target_id);
            if (!cur) throw Error(ErrorCode::schema, "edit " + std::to_string(r.seq) + " targets unknown object");
            *cur = std::move(o);
        }
        sort_corpus(corpus, images);
        break;
    }
    case EditTarget::keyword: {
        const std::size_t limit = keywords.size() + (r.action == EditAction::add ? 1 : 0);
        const std::size_t idx = parse_index(r.target_id, limit, "keyword");
        const auto pos = keywords.begin() + static_cast<std::ptrdiff_t>(idx);
        if (r.action == EditAction::add) keywords.insert(pos, need_after().get<std::string>());
        else if (r.action == EditAction::modify) *pos = need_after().get<std::string>();
        else keywords.erase(pos);
        break;
    }
    case EditTarget::style:
        style = need_after().get<LanguageStyle>();
        break;
    case EditTarget::segment:
        break;  // stories are versioned, not replayed
    }
}

EditRecord prepare_caption_edit(const Session& s, const EditRecord& e) {
    EditRecord r{0, e.target, e.action, e.target_id, std::nullopt, std::nullopt, {}};
    Caption c;
    if (e.action == EditAction::add) {
        const json& v = object_value(e);
        c.image_id = string_field(v, "image_id");
        c.text = string_field(v, "text");
        check_image(s.images, c.image_id);
        c.id = next_item_id(s.corpus, ItemKind::caption);
        r.target_id = c.id;
    } else {
        auto it = std::find_if(s.corpus.captions.begin(), s.corpus.captions.end(),
                               [&](const Caption& x) { return x.id == e.target_id; });
        if (it == s.corpus.captions.end())
            throw Error(ErrorCode::unknown_target, "no caption " + e.target_id, "target_id");
        c = *it;
        r.before = json(c);
        if (e.action == EditAction::remove) {
            if (c.deleted) throw bad_value("deleted", "caption " + c.id + " is already removed");
            c.deleted = true;
        } else {
            const json& v = object_value(e);
            optional_field(v, "text", c.text);
            optional_field(v, "deleted", c.deleted);
        }
    }
    c.origin = Origin::user_edited;
    validate(c);
    r.after = json(c);
    return r;
}

EditRecord prepare_object_edit(const Session& s, const EditRecord& e) {
    EditRecord r{0, e.target, e.action, e.target_id, std::nullopt, std::nullopt, {}};
    DetectedObject o;
    if (e.action == EditAction::add) {
        const json& v = object_value(e);
        o.image_id = string_field(v, "image_id");
        o.label = string_field(v, "label");
        o.confidence = 1.0;
        o.bbox = {0.0, 0.0, 1.0, 1.0};
        optional_field(v, "confidence", o.confidence);
        optional_field(v, "bbox", o.bbox);
        check_image(s.images, o.image_id);
        o.id = next_item_id(s.corpus, ItemKind::object);
        r.target_id = o.id;
    } else {
        auto it = std::find_if(s.corpus.objects.begin(), s.corpus.objects.end(),
                               [&](const DetectedObject& x) { return x.id == e.target_id; });
        if (it == s.corpus.objects.end())
            throw Error(ErrorCode::unknown_target, "no object " + e.target_id, "target_id");
        o = *it;
        r.before = json(o);
        if (e.action == EditAction::remove) {
            if (o.deleted) throw bad_value("deleted", "object " + o.id + " is already removed");
            o.deleted = true;
        } else {
            const json& v = object_value(e);
            optional_field(v, "label", o.label);
            optional_field(v, "confidence", o.confidence);
            optional_field(v, "bbox", o.bbox);
            optional_field(v, "deleted", o.deleted);
        }
    }
    o.origin = Origin::user_edited;
    validate(o);
    check_unique_label(s.corpus, o);
    r.after = json(o);
    return r;
}

EditRecord prepare_keyword_edit(const Session& s, const EditRecord& e) {
    EditRecord r{0, e.target, e.action, e.target_id, std::nullopt, std::nullopt, {}};
    if (e.action == EditAction::add) {
        const std::size_t idx =
            e.target_id.empty() ? s.keywords.size() : parse_index(e.target_id, s.keywords.size() + 1, "keyword slot");
        r.target_id = std::to_string(idx);
        r.after = keyword_value(e);
        return r;
    }
    const std::size_t idx = parse_index(e.target_id, s.keywords.size(), "keyword");
    r.before = s.keywords[idx];
    if (e.action == EditAction::modify) r.after = keyword_value(e);
    return r;
}

EditRecord prepare_style_edit(const Session& s, const EditRecord& e) {
    if (e.action != EditAction::modify) throw bad_value("action", "style can only be modified");
    if (!e.after) throw bad_value("after", "style edit needs a value");
    LanguageStyle style;
    try {
        style = e.after->get<LanguageStyle>();
        validate(style);
    } catch (const json::exception& ex) {
        throw bad_value("style", ex.what());
    } catch (const Error& ex) {
        throw bad_value(ex.field().empty() ? "style" : ex.field(), ex.what());
    }
    return EditRecord{0, e.target, e.action, "style", json(s.style), json(style), {}};
}

} // namespace

EditableState editable_state(const Session& session) {
    EditableState st{session.corpus, session.keywords, session.style};
    st.corpus.flags.clear();
    return st;
}

const EditRecord& apply_edit(Session& session, const EditRecord& edit) {
    EditRecord r;
    try {
        switch (edit.target) {
        case EditTarget::caption: r = prepare_caption_edit(session, edit); break;
        case EditTarget::object: r = prepare_object_edit(session, edit); break;
        case EditTarget::keyword: r = prepare_keyword_edit(session, edit); break;
        case EditTarget::style: r = prepare_style_edit(session, edit); break;
        case EditTarget::segment: throw bad_value("target", "segments are amended with amend_segment");
        }
    } catch (const Error& e) {
        if (e.code() == ErrorCode::schema) throw bad_value(e.field(), e.what());
        throw;
    }
    apply_record(session.corpus, session.keywords, session.style, r, session.images);
    return log_edit(session, r.target, r.action, r.target_id, std::move(r.before), std::move(r.after));
}

void replay_edit(EditableState& state, const EditRecord& record, std::span<const ImageAsset> images) {
    apply_record(state.corpus, state.keywords, state.style, record, images);
}

EditableState replay_edit_log(std::span<const EditRecord> edits, std::span<const ImageAsset> images) {
    EditableState st;
    for (const auto& e : edits) replay_edit(st, e, images);
    return st;
}

const StoryVersion& regenerate(Session& session, LlmBackend& backend, const GenerationParams& params,
                               const PromptTemplates& templates) {
    return generate_for_session(backend, session, StoryMode::imagetalk_steered, params, templates);
}

const StoryVersion& amend_segment(Session& session, int version, std::size_t index, std::string new_text) {
    const StoryVersion* parent = find_story(session, version);
    if (!parent) throw Error(ErrorCode::not_found, "no story version " + std::to_string(version), "version");
    if (index >= parent->segments.size())
        throw Error(ErrorCode::bad_index,
                    "segment index " + std::to_string(index) + " out of range for " +
                        std::to_string(parent->segments.size()) + " segments",
                    "index");
    if (text::trim(new_text).empty()) throw bad_value("text", "amended segment text must be non-empty");

    StoryVersion next;
    next.version = latest_version(session) + 1;
    next.segments = parent->segments;
    const std::string old_text = next.segments[index].text;
    next.segments[index].text = new_text;
    for (const auto& seg : next.segments) next.text += seg.text + seg.trailing_separator;
    next.mode = StoryMode::imagetalk_steered;
    next.prompt_hash = parent->prompt_hash;
    next.parent_version = version;
    next.created_at = utc_timestamp();

    const std::string target_id = std::to_string(version) + ":" + std::to_string(index);
    const int new_version = next.version;
    append_story_version(session, std::move(next));
    log_edit(session, EditTarget::segment, EditAction::modify, target_id, json(old_text),
             json{{"text", new_text}, {"version", new_version}});
    return session.stories.back();
}

} // namespace imagetalk
