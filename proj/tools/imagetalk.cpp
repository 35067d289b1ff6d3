// imagetalk: serve the steering API, generate stories for session files, and
// evaluate a dataset of sessions.

#include "imagetalk/generation.hpp"
#include "imagetalk/metrics.hpp"
#include "imagetalk/prompthub.hpp"
#include "imagetalk/recognition.hpp"
#include "imagetalk/service.hpp"
#include "imagetalk/store.hpp"

#include <CLI11.hpp>

#include <csignal>
#include <iostream>

namespace fs = std::filesystem;
using namespace imagetalk;

namespace {

struct BackendOptions {
    std::string caption = "mock";
    std::string detect = "mock";
    std::string llm = "mock";
    std::string recognition_fixture;
    std::string templates;
    std::string llm_key_env = "IMAGETALK_LLM_API_KEY";
    int recognition_timeout_ms = 10000;
    int llm_timeout_ms = 30000;
    int retries = 2;
    int max_objects = 10;
    double confidence_floor = 0.5;
    double temperature = 0.7;
    int max_length = 300;
    std::optional<std::int64_t> seed;

    void add_to(CLI::App& app) {
        app.add_option("--caption-backend", caption, "Captioning backend URL or 'mock'");
        app.add_option("--detect-backend", detect, "Detection backend URL or 'mock'");
        app.add_option("--llm-backend", llm, "LLM backend URL or 'mock'");
        app.add_option("--recognition-fixture", recognition_fixture, "Fixture file for the mock recognizers");
        app.add_option("--templates", templates, "Prompt template file");
        app.add_option("--llm-key-env", llm_key_env, "Environment variable holding the LLM credential");
        app.add_option("--recognition-timeout-ms", recognition_timeout_ms)->check(CLI::PositiveNumber);
        app.add_option("--llm-timeout-ms", llm_timeout_ms)->check(CLI::PositiveNumber);
        app.add_option("--retries", retries)->check(CLI::Range(0, 10));
        app.add_option("--max-objects", max_objects)->check(CLI::PositiveNumber);
        app.add_option("--confidence-floor", confidence_floor)->check(CLI::Range(0.0, 1.0));
        app.add_option("--temperature", temperature)->check(CLI::NonNegativeNumber);
        app.add_option("--max-length", max_length)->check(CLI::PositiveNumber);
        app.add_option("--seed", seed);
    }

    RecognitionBackendConfig recognition_config(const std::string& url) const {
        RecognitionBackendConfig c;
        if (url != "mock") {
            c.kind = BackendKind::remote;
            c.endpoint_url = url;
        }
        c.timeout_ms = recognition_timeout_ms;
        c.max_objects = max_objects;
        c.confidence_floor = confidence_floor;
        c.validate();
        return c;
    }

    std::shared_ptr<MockRecognizer> mock_recognizer() const {
        if (recognition_fixture.empty()) return std::make_shared<MockRecognizer>();
        return std::make_shared<MockRecognizer>(MockRecognizer::from_file(recognition_fixture));
    }

    std::shared_ptr<Captioner> captioner() const {
        if (caption == "mock") return mock_recognizer();
        return std::make_shared<RemoteRecognizer>(recognition_config(caption));
    }

    std::shared_ptr<Detector> detector() const {
        if (detect == "mock") return mock_recognizer();
        return std::make_shared<RemoteRecognizer>(recognition_config(detect));
    }

    std::shared_ptr<LlmBackend> llm_backend() const {
        LlmBackendConfig c;
        if (llm != "mock") {
            c.kind = BackendKind::remote;
            c.endpoint_url = llm;
            c.api_key_env = llm_key_env;
        }
        c.timeout_ms = llm_timeout_ms;
        c.retries = retries;
        return make_llm_backend(c);
    }

    PromptTemplates prompt_templates() const {
        return templates.empty() ? PromptTemplates::defaults() : PromptTemplates::from_file(templates);
    }

    GenerationParams params() const {
        GenerationParams p;
        p.temperature = temperature;
        p.max_length = max_length;
        p.seed = seed;
        p.validate();
        return p;
    }
};

Service* g_service = nullptr;

void on_signal(int) {
    if (g_service) g_service->stop();
}

int run_serve(const BackendOptions& opts, const std::string& host, int port, const std::string& data_dir,
              const std::string& embeddings) {
    ServiceConfig cfg;
    cfg.captioner = opts.captioner();
    cfg.detector = opts.detector();
    cfg.llm = opts.llm_backend();
    cfg.recognition = opts.recognition_config("mock");
    cfg.llm_timeout_ms = opts.llm_timeout_ms;
    cfg.templates = opts.prompt_templates();
    cfg.default_params = opts.params();
    cfg.data_dir = data_dir;
    if (!embeddings.empty()) cfg.embeddings = std::make_shared<EmbeddingTable>(load_embeddings(embeddings));

    Service service(std::move(cfg));
    service.bind(host, port);
    g_service = &service;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    std::cerr << "imagetalk listening on " << host << ":" << port << "\n";
    service.listen();
    g_service = nullptr;
    return 0;
}

int run_generate(const BackendOptions& opts, const fs::path& session_path, const std::string& mode_name) {
    Session session = load_session_file(session_path);
    const auto llm = opts.llm_backend();
    const auto params = opts.params();
    const auto templates = opts.prompt_templates();

    const StoryVersion* story = nullptr;
    if (mode_name == "kts") {
        story = &generate_for_session(*llm, session, StoryMode::kts, params, templates);
    } else {
        if (session.images.empty())
            throw Error(ErrorCode::precondition, "auto mode needs at least one image in the session", "images");
        const SessionStore store(session_path.has_parent_path() ? session_path.parent_path() : fs::path("."), false);
        const auto captioner = opts.captioner();
        const auto detector = opts.detector();
        const auto rec = opts.recognition_config("mock");
        recognize_session(
            session, *captioner, *detector, [&](const ImageAsset& img) { return store.read_image(img); }, rec);
        story = &generate_for_session(*llm, session, StoryMode::imagetalk_auto, params, templates);
    }
    const std::string text = story->text;
    save_session_file(session, session_path);
    std::cout << text << "\n";
    return 0;
}

int run_eval(const fs::path& dataset_dir, const fs::path& embeddings_path, const fs::path& out_path,
             const std::string& csv_path) {
    if (!fs::is_directory(dataset_dir)) throw Error(ErrorCode::not_found, "dataset directory not found: " + dataset_dir.string());
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dataset_dir))
        if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
    std::sort(files.begin(), files.end());

    std::vector<Session> dataset;
    for (const auto& f : files) {
        try {
            dataset.push_back(load_session_file(f));
        } catch (const Error& e) {
            throw Error(e.code(), f.string() + ": " + e.what(), e.field());
        }
    }
    if (dataset.empty()) throw Error(ErrorCode::precondition, "no session files in " + dataset_dir.string());

    EmbeddingTable table;
    try {
        table = load_embeddings(embeddings_path);
    } catch (const Error& e) {
        throw Error(e.code(), std::string("embeddings file ") + embeddings_path.string() + ": " + e.what());
    }
    for (const auto& w : table.warnings) std::cerr << "warning: " << w << "\n";

    const MetricsReport report = benchmark_report(dataset, table);
    write_file_atomic(out_path, report_to_json(report).dump(2) + "\n");
    if (!csv_path.empty()) write_file_atomic(csv_path, report_to_csv(report));
    for (const auto& w : report.warnings) std::cerr << "warning: " << w << "\n";
    std::cout << report_summary_table(report);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"ImageTalk story generation engine"};
    app.require_subcommand(1);

    BackendOptions serve_opts;
    std::string host = "127.0.0.1";
    int port = 8080;
    std::string data_dir = "imagetalk-data";
    std::string serve_embeddings;
    auto* serve = app.add_subcommand("serve", "Run the HTTP steering service");
    serve_opts.add_to(*serve);
    serve->add_option("--host", host);
    serve->add_option("--port", port)->check(CLI::Range(0, 65535));
    serve->add_option("--data-dir", data_dir, "Directory for session documents and images");
    serve->add_option("--embeddings", serve_embeddings, "word2vec text file enabling similarity in /metrics");

    BackendOptions gen_opts;
    std::string session_file;
    std::string mode = "kts";
    auto* generate = app.add_subcommand("generate", "Generate a story for a session file");
    gen_opts.add_to(*generate);
    generate->add_option("--session", session_file, "Session file")->required();
    generate->add_option("--mode", mode, "kts or auto")->check(CLI::IsMember({"kts", "auto"}));

    std::string dataset, embeddings, out, csv;
    auto* eval = app.add_subcommand("eval", "Evaluate a dataset of sessions");
    eval->add_option("--dataset", dataset, "Directory of session files")->required();
    eval->add_option("--embeddings", embeddings, "word2vec text embeddings")->required();
    eval->add_option("--out", out, "Report output file")->required();
    eval->add_option("--csv", csv, "Optional per-item CSV output");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*serve) return run_serve(serve_opts, host, port, data_dir, serve_embeddings);
        if (*generate) return run_generate(gen_opts, session_file, mode);
        if (*eval) return run_eval(dataset, embeddings, out, csv);
    } catch (const Error& e) {
        std::cerr << "error (" << to_string(e.code()) << "): " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
