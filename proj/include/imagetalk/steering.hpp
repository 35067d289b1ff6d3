#pragma once

#include "imagetalk/domain.hpp"
#include "imagetalk/generation.hpp"
#include "imagetalk/prompthub.hpp"

#include <span>
#include <string>

namespace imagetalk {

// The steerable part of a session: what the edit log replays into. Flags
// are derived data and stay empty here.
struct EditableState {
    ContextCorpus corpus;
    KeywordList keywords;
    LanguageStyle style;

    bool operator==(const EditableState&) const = default;
};

EditableState editable_state(const Session& session);

// Applies a user edit. Only target, action, target_id and `after` of `edit`
// are read; `after` carries the new value:
//   caption add     {image_id, text}
//   caption modify  {text?, deleted?}
//   object add      {image_id, label, confidence?, bbox?}
//   object modify   {label?, confidence?, bbox?, deleted?}
//   keyword add     "text" (target_id: optional insert position, default end)
//   keyword modify  "text" (target_id: index)
//   keyword remove  (target_id: index)
//   style modify    full LanguageStyle
// Removal of captions/objects is soft. Corpus items touched become
// user_edited. Returns the appended record, whose before/after hold the full
// item values. On error the session is unchanged.
const EditRecord& apply_edit(Session& session, const EditRecord& edit);

// Applies one logged record to a state (the replay step).
void replay_edit(EditableState& state, const EditRecord& record, std::span<const ImageAsset> images);

// Replays the log over a fresh session's state.
EditableState replay_edit_log(std::span<const EditRecord> edits, std::span<const ImageAsset> images);

// Re-assembles an imagetalk prompt from the session's current corpus,
// keywords and style and generates a steered version whose parent is the
// latest version. Never reads prior story text.
const StoryVersion& regenerate(Session& session, LlmBackend& backend, const GenerationParams& params,
                               const PromptTemplates& templates = PromptTemplates::defaults());

// New version equal to `version` except segment `index`, whose text becomes
// `new_text`. No regeneration. Logs a segment edit.
const StoryVersion& amend_segment(Session& session, int version, std::size_t index, std::string new_text);

} // namespace imagetalk
