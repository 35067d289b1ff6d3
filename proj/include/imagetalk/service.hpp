#pragma once

#include "imagetalk/domain.hpp"
#include "imagetalk/generation.hpp"
#include "imagetalk/metrics.hpp"
#include "imagetalk/prompthub.hpp"
#include "imagetalk/recognition.hpp"

#include <filesystem>
#include <memory>
#include <string>

namespace imagetalk {

struct ServiceConfig {
    std::shared_ptr<Captioner> captioner;
    std::shared_ptr<Detector> detector;
    std::shared_ptr<LlmBackend> llm;
    RecognitionBackendConfig recognition;  // floor and max_objects
    int llm_timeout_ms = 30000;
    PromptTemplates templates = PromptTemplates::defaults();
    GenerationParams default_params;
    std::filesystem::path data_dir;  // session documents and image payloads
    std::shared_ptr<const EmbeddingTable> embeddings;  // optional; enables similarity in /metrics
};

// HTTP API over sessions. Requests for different sessions run concurrently;
// a mutation that arrives while another one on the same session is in flight
// gets 409. Every mutation is persisted to data_dir before it is answered.
//
//   POST  /sessions                         -> {id, session}
//   POST  /sessions/{id}/images             multipart "image" -> ImageAsset
//   POST  /sessions/{id}/recognize          -> {corpus, flags}
//   PATCH /sessions/{id}/context            {target, action, id?, value?} -> {corpus, flags}
//   PUT   /sessions/{id}/keywords           {keywords} -> {keywords, flags}
//   PUT   /sessions/{id}/style              LanguageStyle -> LanguageStyle
//   POST  /sessions/{id}/generate           {mode, params?} -> StoryVersion
//   POST  /sessions/{id}/steer/regenerate   {params?} -> StoryVersion
//   POST  /sessions/{id}/steer/amend        {version, index, text} -> StoryVersion
//   GET   /sessions/{id}
//   GET   /sessions/{id}/stories/{version}
//   GET   /sessions/{id}/metrics
//
// Errors are {error, code, field?} with 400 (bad input), 404 (unknown session,
// story or item), 409 (busy / version conflict), 422 (precondition), 502/504
// (backend failure / timeout).
class Service {
public:
    explicit Service(ServiceConfig config);
    ~Service();
    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    // Throws Error(io) when the port cannot be bound.
    void bind(const std::string& host, int port);
    // Binds an ephemeral port and returns it.
    int bind_to_any_port(const std::string& host = "127.0.0.1");
    // Blocks until stop(); in-flight requests complete first.
    void listen();
    void stop();
    bool is_running() const;
    void wait_until_ready() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace imagetalk
