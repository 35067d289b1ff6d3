#pragma once

#include "imagetalk/domain.hpp"
#include "imagetalk/prompthub.hpp"
#include "imagetalk/recognition.hpp"

#include <chrono>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace imagetalk {

struct LlmBackendConfig {
    BackendKind kind = BackendKind::mock;
    std::optional<std::string> endpoint_url;
    std::optional<std::string> api_key_env;  // name of the variable, never the key
    int timeout_ms = 30000;
    int retries = 2;

    // endpoint_url and api_key_env iff remote; retries in [0, 10].
    void validate() const;
};

class LlmBackend {
public:
    virtual ~LlmBackend() = default;
    virtual std::string complete(const PromptBundle& prompt) = 0;
};

// Deterministic stand-in for the language model. Output structure:
//   "I <keyword>." per keyword, in order
//   "I remember <caption>." per non-deleted caption (imagetalk prompts only)
//   "It felt <style_id>."
// joined by single spaces.
std::string mock_complete(const PromptBundle& prompt);

class MockLlm final : public LlmBackend {
public:
    std::string complete(const PromptBundle& prompt) override { return mock_complete(prompt); }
};

// POST {endpoint}/complete {prompt, temperature, max_length, seed?} -> {text}
// with "Authorization: Bearer $<api_key_env>". Timeouts are retried with a
// backoff of 250 ms doubling per attempt, each wait capped at timeout_ms.
class RemoteLlm final : public LlmBackend {
public:
    using Sleeper = std::function<void(std::chrono::milliseconds)>;

    explicit RemoteLlm(LlmBackendConfig config, Sleeper sleep = {});
    std::string complete(const PromptBundle& prompt) override;

private:
    LlmBackendConfig config_;
    Sleeper sleep_;
};

std::unique_ptr<LlmBackend> make_llm_backend(const LlmBackendConfig& config);

// Splits after '.', '!' or '?' when followed by whitespace or end of text.
// The whitespace run after a terminator becomes trailing_separator, so the
// concatenation of text + trailing_separator reproduces the input exactly.
std::vector<Segment> segment_story(std::string_view text);

// Completes the prompt and appends the resulting version to the session.
// `mode` must agree with prompt.mode (kts <-> kts). A failed completion
// leaves the session untouched.
const StoryVersion& generate_story(LlmBackend& backend, const PromptBundle& prompt, Session& session, StoryMode mode,
                                   std::optional<int> parent_version = std::nullopt);

// Builds the prompt from the session's current state and generates.
// kts ignores images; imagetalk_auto / imagetalk_steered need at least one
// image. Steered versions take the latest version as parent.
const StoryVersion& generate_for_session(LlmBackend& backend, Session& session, StoryMode mode,
                                         const GenerationParams& params,
                                         const PromptTemplates& templates = PromptTemplates::defaults());

} // namespace imagetalk
