#include "imagetalk/generation.hpp"

#include "http_json.hpp"
#include "imagetalk/text.hpp"

#include <algorithm>
#include <cstdlib>
#include <thread>

namespace imagetalk {

void LlmBackendConfig::validate() const {
    if (kind == BackendKind::remote) {
        if (!endpoint_url || endpoint_url->empty())
            throw Error(ErrorCode::invalid_argument, "remote LLM backend requires endpoint_url", "endpoint_url");
        if (!api_key_env || api_key_env->empty())
            throw Error(ErrorCode::invalid_argument, "remote LLM backend requires api_key_env", "api_key_env");
    } else if (endpoint_url || api_key_env) {
        throw Error(ErrorCode::invalid_argument, "mock LLM backend takes no endpoint or credential", "endpoint_url");
    }
    if (timeout_ms <= 0) throw Error(ErrorCode::invalid_argument, "timeout_ms must be positive", "timeout_ms");
    if (retries < 0 || retries > 10) throw Error(ErrorCode::invalid_argument, "retries must be in [0, 10]", "retries");
}

std::string mock_complete(const PromptBundle& prompt) {
    std::vector<std::string> sentences;
    for (const auto& k : prompt.keywords) sentences.push_back("I " + k + ".");
    for (const auto& c : prompt.context_captions) sentences.push_back("I remember " + c + ".");
    sentences.push_back("It felt " + std::string(to_string(prompt.style.style_id)) + ".");
    std::string out;
    for (std::size_t i = 0; i < sentences.size(); ++i) {
        if (i) out.push_back(' ');
        out += sentences[i];
    }
    return out;
}

RemoteLlm::RemoteLlm(LlmBackendConfig config, Sleeper sleep) : config_(std::move(config)), sleep_(std::move(sleep)) {
    config_.validate();
    if (config_.kind != BackendKind::remote)
        throw Error(ErrorCode::invalid_argument, "RemoteLlm needs a remote config", "kind");
    detail::parse_endpoint(*config_.endpoint_url);
    if (!sleep_) sleep_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

std::string RemoteLlm::complete(const PromptBundle& prompt) {
    const char* key = std::getenv(config_.api_key_env->c_str());
    if (key == nullptr || *key == '\0')
        throw Error(ErrorCode::precondition, "credential variable " + *config_.api_key_env + " is not set",
                    "api_key_env");

    json body{{"prompt", prompt.assembled_text},
              {"temperature", prompt.params.temperature},
              {"max_length", prompt.params.max_length}};
    if (prompt.params.seed) body["seed"] = *prompt.params.seed;

    const auto endpoint = detail::parse_endpoint(*config_.endpoint_url);
    const std::vector<std::pair<std::string, std::string>> headers{{"Authorization", std::string("Bearer ") + key}};

    std::chrono::milliseconds backoff{250};
    for (int attempt = 0;; ++attempt) {
        try {
            const json res = detail::post_json(endpoint, "/complete", body, config_.timeout_ms, headers);
            auto it = res.find("text");
            if (it == res.end() || !it->is_string())
                throw Error(ErrorCode::malformed_response, "completion response is missing text", "text");
            return it->get<std::string>();
        } catch (const Error& e) {
            if (e.code() != ErrorCode::backend_timeout || attempt >= config_.retries) throw;
        }
        sleep_(std::min(backoff, std::chrono::milliseconds(config_.timeout_ms)));
        backoff *= 2;
    }
}

std::unique_ptr<LlmBackend> make_llm_backend(const LlmBackendConfig& config) {
    config.validate();
    if (config.kind == BackendKind::mock) return std::make_unique<MockLlm>();
    return std::make_unique<RemoteLlm>(config);
}

std::vector<Segment> segment_story(std::string_view text) {
    auto is_ws = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; };
    std::vector<Segment> out;
    std::size_t start = 0;
    std::size_t i = 0;
    while (i < text.size()) {
        const char c = text[i];
        const bool terminator = c == '.' || c == '!' || c == '?';
        if (terminator && (i + 1 == text.size() || is_ws(text[i + 1]))) {
            std::size_t sep_end = i + 1;
            while (sep_end < text.size() && is_ws(text[sep_end])) ++sep_end;
            out.push_back({out.size(), std::string(text.substr(start, i + 1 - start)),
                           std::string(text.substr(i + 1, sep_end - i - 1))});
            start = i = sep_end;
            continue;
        }
        ++i;
    }
    if (start < text.size()) out.push_back({out.size(), std::string(text.substr(start)), ""});
    return out;
}

const StoryVersion& generate_story(LlmBackend& backend, const PromptBundle& prompt, Session& session, StoryMode mode,
                                   std::optional<int> parent_version) {
    const bool kts = mode == StoryMode::kts;
    if (kts != (prompt.mode == PromptMode::kts))
        throw Error(ErrorCode::invalid_argument, "story mode does not match prompt mode", "mode");

    std::string completion = backend.complete(prompt);
    if (text::trim(completion).empty()) throw Error(ErrorCode::empty_completion, "backend returned an empty story");

    StoryVersion story;
    story.version = latest_version(session) + 1;
    story.segments = segment_story(completion);
    story.text = std::move(completion);
    story.mode = mode;
    story.prompt_hash = prompt.hash;
    story.parent_version = parent_version;
    story.created_at = utc_timestamp();
    append_story_version(session, std::move(story));
    return session.stories.back();
}

const StoryVersion& generate_for_session(LlmBackend& backend, Session& session, StoryMode mode,
                                         const GenerationParams& params, const PromptTemplates& templates) {
    if (session.keywords.empty())
        throw Error(ErrorCode::precondition, "session has no keywords", "keywords");
    if (mode == StoryMode::kts) {
        const auto prompt =
            assemble_prompt(nullptr, session.keywords, session.style, PromptMode::kts, params, templates);
        return generate_story(backend, prompt, session, mode);
    }
    if (session.images.empty())
        throw Error(ErrorCode::precondition, "imagetalk generation needs at least one image", "images");
    const auto prompt =
        assemble_prompt(&session.corpus, session.keywords, session.style, PromptMode::imagetalk, params, templates);
    std::optional<int> parent;
    if (mode == StoryMode::imagetalk_steered && !session.stories.empty()) parent = latest_version(session);
    return generate_story(backend, prompt, session, mode, parent);
}

} // namespace imagetalk
