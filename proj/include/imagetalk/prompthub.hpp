#pragma once

#include "imagetalk/domain.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace imagetalk {

enum class PromptMode { kts, imagetalk };

std::string_view to_string(PromptMode m);

struct GenerationParams {
    double temperature = 0.7;
    int max_length = 300;
    std::optional<std::int64_t> seed;

    void validate() const;
    bool operator==(const GenerationParams&) const = default;
};

void to_json(json& j, const GenerationParams& v);
// Missing fields keep their defaults; wrong types are schema errors.
void from_json(const json& j, GenerationParams& v);

struct PromptBundle {
    PromptMode mode = PromptMode::kts;
    std::string system_directive;
    std::string context_block;  // empty for kts
    std::string keyword_block;
    std::string style_block;
    GenerationParams params;
    std::string assembled_text;
    std::string hash;  // sha256 over assembled_text and params

    // The inputs the blocks were rendered from (deleted items already
    // removed). Not part of the hash; the mock LLM reads these.
    KeywordList keywords;
    std::vector<std::string> context_captions;
    std::vector<std::string> context_objects;
    LanguageStyle style;
};

void to_json(json& j, const PromptBundle& v);

// Named template blocks with {placeholder} substitution.
class PromptTemplates {
public:
    // The shipped templates (identical to templates/default.tmpl).
    static const PromptTemplates& defaults();
    // Parses a template file; blocks it defines override the defaults.
    static PromptTemplates parse(std::string_view text);
    static PromptTemplates from_file(const std::filesystem::path& path);

    const std::string& block(std::string_view name) const;
    const std::map<std::string, std::string, std::less<>>& blocks() const noexcept { return blocks_; }

    bool operator==(const PromptTemplates&) const = default;

private:
    std::map<std::string, std::string, std::less<>> blocks_;
};

extern const std::string_view kDefaultTemplateText;

std::string render_acceptance_directive(AcceptanceLevel level,
                                        const PromptTemplates& templates = PromptTemplates::defaults());

// `corpus` must be non-null for imagetalk and is ignored for kts.
PromptBundle assemble_prompt(const ContextCorpus* corpus, const KeywordList& keywords, const LanguageStyle& style,
                             PromptMode mode, const GenerationParams& params,
                             const PromptTemplates& templates = PromptTemplates::defaults());

std::string prompt_hash(std::string_view assembled_text, const GenerationParams& params);

} // namespace imagetalk
