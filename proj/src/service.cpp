#include "imagetalk/service.hpp"

#include "imagetalk/steering.hpp"
#include "imagetalk/store.hpp"
#include "imagetalk/text.hpp"

#include <httplib.h>

#include <atomic>
#include <map>
#include <mutex>
#include <optional>

namespace imagetalk {

namespace {

struct SessionSlot {
    std::mutex mu;  // guards `session` for snapshot and commit
    std::atomic<bool> busy{false};
    Session session;
};

int status_for(ErrorCode code) {
    switch (code) {
    case ErrorCode::invalid_argument:
    case ErrorCode::schema:
    case ErrorCode::bad_index: return 400;
    case ErrorCode::not_found:
    case ErrorCode::unknown_target: return 404;
    case ErrorCode::version_conflict:
    case ErrorCode::busy: return 409;
    case ErrorCode::precondition:
    case ErrorCode::undefined_metric:
    case ErrorCode::no_vector: return 422;
    case ErrorCode::backend_error:
    case ErrorCode::malformed_response:
    case ErrorCode::empty_completion: return 502;
    case ErrorCode::backend_timeout: return 504;
    case ErrorCode::io: return 500;
    }
    return 500;
}

void send_json(httplib::Response& res, const json& body, int status = 200) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& code, const std::string& message,
                const std::string& field = {}) {
    json body{{"error", message}, {"code", code}};
    if (!field.empty()) body["field"] = field;
    send_json(res, body, status);
}

json parse_body(const httplib::Request& req, bool allow_empty) {
    if (req.body.empty() || text::trim(req.body).empty()) {
        if (allow_empty) return json::object();
        throw Error(ErrorCode::invalid_argument, "request body is required", "body");
    }
    json j;
    try {
        j = json::parse(req.body);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::invalid_argument, std::string("request body is not valid JSON: ") + e.what(), "body");
    }
    if (!j.is_object()) throw Error(ErrorCode::invalid_argument, "request body must be an object", "body");
    return j;
}

GenerationParams params_from(const json& body, const GenerationParams& defaults) {
    GenerationParams p = defaults;
    if (auto it = body.find("params"); it != body.end() && !it->is_null()) from_json(*it, p);
    p.validate();
    return p;
}

EditAction action_from(const json& body) {
    auto it = body.find("action");
    if (it == body.end() || !it->is_string()) throw Error(ErrorCode::invalid_argument, "action is required", "action");
    return parse_enum<EditAction>(it->get<std::string>(), "action");
}

json corpus_response(const Session& s) {
    return json{{"corpus", s.corpus}, {"flags", s.corpus.flags}};
}

} // namespace

struct Service::Impl {
    ServiceConfig config;
    SessionStore store;
    httplib::Server server;
    std::mutex registry_mu;
    std::map<std::string, std::shared_ptr<SessionSlot>, std::less<>> registry;

    explicit Impl(ServiceConfig c) : config(std::move(c)), store(config.data_dir, true) {
        if (!config.captioner || !config.detector || !config.llm)
            throw Error(ErrorCode::invalid_argument, "service needs caption, detection and LLM backends");
        config.recognition.validate();
        config.default_params.validate();
        const time_t secs = config.llm_timeout_ms / 1000 + 1;
        server.set_read_timeout(secs + 1, 0);
        server.set_write_timeout(secs + 1, 0);
        server.set_payload_max_length(64u << 20);
        routes();
    }

    std::shared_ptr<SessionSlot> slot(const std::string& id) {
        std::lock_guard lk(registry_mu);
        if (auto it = registry.find(id); it != registry.end()) return it->second;
        auto s = std::make_shared<SessionSlot>();
        s->session = store.load(id);  // throws not_found
        registry.emplace(id, s);
        return s;
    }

    Session snapshot(const std::string& id) {
        auto s = slot(id);
        std::lock_guard lk(s->mu);
        return s->session;
    }

    // Single-writer mutation: works on a copy, persists, then publishes.
    template <typename Fn>
    auto mutate(const std::string& id, Fn&& fn) {
        auto s = slot(id);
        if (s->busy.exchange(true)) throw Error(ErrorCode::busy, "session " + id + " is being modified");
        struct Release {
            SessionSlot& slot;
            ~Release() { slot.busy = false; }
        } release{*s};
        Session work;
        {
            std::lock_guard lk(s->mu);
            work = s->session;
        }
        auto result = fn(work);
        store.save(work);
        {
            std::lock_guard lk(s->mu);
            s->session = std::move(work);
        }
        return result;
    }

    template <typename Fn>
    httplib::Server::Handler handler(Fn fn) {
        return [fn](const httplib::Request& req, httplib::Response& res) {
            try {
                fn(req, res);
            } catch (const Error& e) {
                send_error(res, status_for(e.code()), to_string(e.code()), e.what(), e.field());
            } catch (const json::exception& e) {
                send_error(res, 400, "invalid_argument", e.what(), "body");
            } catch (const std::exception& e) {
                send_error(res, 500, "internal", e.what());
            }
        };
    }

    void routes() {
        constexpr const char* kId = "/sessions/([A-Za-z0-9_.-]+)";
        auto path = [&](const char* suffix) { return std::string(kId) + suffix; };

        server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                    {"Access-Control-Allow-Methods", "GET, POST, PUT, PATCH, OPTIONS"},
                                    {"Access-Control-Allow-Headers", "Content-Type"}});
        server.Options(".*", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

        server.Post("/sessions", handler([this](const httplib::Request& req, httplib::Response& res) {
            const json body = parse_body(req, true);
            Session s = create_session();
            if (auto it = body.find("keywords"); it != body.end()) {
                if (!it->is_array()) throw Error(ErrorCode::invalid_argument, "keywords must be an array", "keywords");
                for (const auto& k : *it)
                    apply_edit(s, EditRecord{0, EditTarget::keyword, EditAction::add, {}, std::nullopt, k, {}});
            }
            if (auto it = body.find("style"); it != body.end())
                apply_edit(s, EditRecord{0, EditTarget::style, EditAction::modify, {}, std::nullopt, *it, {}});
            if (auto it = body.find("reference_story"); it != body.end() && !it->is_null()) {
                if (!it->is_string())
                    throw Error(ErrorCode::invalid_argument, "reference_story must be a string", "reference_story");
                s.reference_story = it->get<std::string>();
            }
            store.save(s);
            {
                std::lock_guard lk(registry_mu);
                auto slot = std::make_shared<SessionSlot>();
                slot->session = s;
                registry.emplace(s.id, std::move(slot));
            }
            send_json(res, json{{"id", s.id}, {"session", s}}, 201);
        }));

        server.Post(path("/images"), handler([this](const httplib::Request& req, httplib::Response& res) {
            std::string payload, source_name, format;
            if (req.is_multipart_form_data()) {
                if (!req.has_file("image"))
                    throw Error(ErrorCode::invalid_argument, "multipart field 'image' is required", "image");
                const auto file = req.get_file_value("image");
                payload = file.content;
                source_name = file.filename;
                if (auto dot = source_name.rfind('.'); dot != std::string::npos) format = source_name.substr(dot + 1);
                if (req.has_file("format")) format = req.get_file_value("format").content;
            } else {
                throw Error(ErrorCode::invalid_argument, "expected a multipart/form-data upload", "image");
            }
            if (payload.empty()) throw Error(ErrorCode::invalid_argument, "image payload is empty", "image");
            const auto asset = mutate(req.matches[1], [&](Session& s) {
                ImageAsset a = store.put_image(payload, source_name, format);
                a.id = "img" + std::to_string(s.images.size() + 1);
                s.images.push_back(a);
                return a;
            });
            send_json(res, asset, 201);
        }));

        server.Post(path("/recognize"), handler([this](const httplib::Request& req, httplib::Response& res) {
            const auto out = mutate(req.matches[1], [&](Session& s) {
                if (s.images.empty())
                    throw Error(ErrorCode::precondition, "upload at least one image before recognition", "images");
                recognize_session(
                    s, *config.captioner, *config.detector,
                    [&](const ImageAsset& img) { return store.read_image(img); }, config.recognition);
                return corpus_response(s);
            });
            send_json(res, out);
        }));

        server.Patch(path("/context"), handler([this](const httplib::Request& req, httplib::Response& res) {
            const json body = parse_body(req, false);
            EditRecord e;
            auto target = body.find("target");
            if (target == body.end() || !target->is_string())
                throw Error(ErrorCode::invalid_argument, "target is required", "target");
            e.target = parse_enum<EditTarget>(target->get<std::string>(), "target");
            if (e.target != EditTarget::caption && e.target != EditTarget::object)
                throw Error(ErrorCode::invalid_argument, "context edits target a caption or an object", "target");
            e.action = action_from(body);
            if (auto it = body.find("id"); it != body.end()) {
                if (!it->is_string()) throw Error(ErrorCode::invalid_argument, "id must be a string", "id");
                e.target_id = it->get<std::string>();
            }
            if (auto it = body.find("value"); it != body.end() && !it->is_null()) e.after = *it;
            const auto out = mutate(req.matches[1], [&](Session& s) {
                apply_edit(s, e);
                refresh_flags(s, config.recognition);
                return corpus_response(s);
            });
            send_json(res, out);
        }));

        server.Put(path("/keywords"), handler([this](const httplib::Request& req, httplib::Response& res) {
            const json body = parse_body(req, false);
            auto it = body.find("keywords");
            if (it == body.end() || !it->is_array() ||
                !std::all_of(it->begin(), it->end(), [](const json& k) { return k.is_string(); }))
                throw Error(ErrorCode::invalid_argument, "keywords must be an array of strings", "keywords");
            const auto wanted = it->get<KeywordList>();
            for (const auto& k : wanted) validate_keyword(k);
            const auto out = mutate(req.matches[1], [&](Session& s) {
                // Positional diff: modify changed slots, then add or remove the tail.
                const std::size_t common = std::min(wanted.size(), s.keywords.size());
                for (std::size_t i = 0; i < common; ++i)
                    if (s.keywords[i] != wanted[i])
                        apply_edit(s, EditRecord{0, EditTarget::keyword, EditAction::modify, std::to_string(i),
                                                 std::nullopt, wanted[i], {}});
                for (std::size_t i = common; i < wanted.size(); ++i)
                    apply_edit(s, EditRecord{0, EditTarget::keyword, EditAction::add, {}, std::nullopt, wanted[i], {}});
                while (s.keywords.size() > wanted.size())
                    apply_edit(s, EditRecord{0, EditTarget::keyword, EditAction::remove,
                                             std::to_string(s.keywords.size() - 1), std::nullopt, std::nullopt, {}});
                refresh_flags(s, config.recognition);
                return json{{"keywords", s.keywords}, {"flags", s.corpus.flags}};
            });
            send_json(res, out);
        }));

        server.Put(path("/style"), handler([this](const httplib::Request& req, httplib::Response& res) {
            const json body = parse_body(req, false);
            const auto out = mutate(req.matches[1], [&](Session& s) {
                if (!(body.contains("style_id") && body.contains("acceptance_level")))
                    throw Error(ErrorCode::invalid_argument, "style_id and acceptance_level are required", "style_id");
                json style = body;
                if (!style.contains("custom_directive")) style["custom_directive"] = nullptr;
                apply_edit(s, EditRecord{0, EditTarget::style, EditAction::modify, {}, std::nullopt, style, {}});
                return json(s.style);
            });
            send_json(res, out);
        }));

        server.Post(path("/generate"), handler([this](const httplib::Request& req, httplib::Response& res) {
            const json body = parse_body(req, false);
            auto m = body.find("mode");
            if (m == body.end() || !m->is_string())
                throw Error(ErrorCode::invalid_argument, "mode is required (kts or imagetalk)", "mode");
            const std::string mode_name = m->get<std::string>();
            StoryMode mode;
            if (mode_name == "kts") mode = StoryMode::kts;
            else if (mode_name == "imagetalk" || mode_name == "auto" || mode_name == "imagetalk_auto")
                mode = StoryMode::imagetalk_auto;
            else throw Error(ErrorCode::invalid_argument, "unknown mode '" + mode_name + "'", "mode");
            const auto params = params_from(body, config.default_params);
            const auto out = mutate(req.matches[1], [&](Session& s) {
                return json(generate_for_session(*config.llm, s, mode, params, config.templates));
            });
            send_json(res, out, 201);
        }));

        server.Post(path("/steer/regenerate"), handler([this](const httplib::Request& req, httplib::Response& res) {
            const json body = parse_body(req, true);
            const auto params = params_from(body, config.default_params);
            const auto out = mutate(req.matches[1], [&](Session& s) {
                return json(regenerate(s, *config.llm, params, config.templates));
            });
            send_json(res, out, 201);
        }));

        server.Post(path("/steer/amend"), handler([this](const httplib::Request& req, httplib::Response& res) {
            const json body = parse_body(req, false);
            auto version = body.find("version");
            auto index = body.find("index");
            auto txt = body.find("text");
            if (version == body.end() || !version->is_number_integer())
                throw Error(ErrorCode::invalid_argument, "version must be an integer", "version");
            if (index == body.end() || !index->is_number_integer() || index->get<long long>() < 0)
                throw Error(ErrorCode::invalid_argument, "index must be a non-negative integer", "index");
            if (txt == body.end() || !txt->is_string())
                throw Error(ErrorCode::invalid_argument, "text must be a string", "text");
            const auto out = mutate(req.matches[1], [&](Session& s) {
                return json(amend_segment(s, version->get<int>(), index->get<std::size_t>(), txt->get<std::string>()));
            });
            send_json(res, out, 201);
        }));

        server.Get(kId, handler([this](const httplib::Request& req, httplib::Response& res) {
            send_json(res, json::parse(serialize_session(snapshot(req.matches[1]))));
        }));

        server.Get(path("/stories/([0-9]+)"), handler([this](const httplib::Request& req, httplib::Response& res) {
            const Session s = snapshot(req.matches[1]);
            const auto* story = find_story(s, std::stoi(req.matches[2]));
            if (!story) throw Error(ErrorCode::not_found, "no story version " + std::string(req.matches[2]), "version");
            send_json(res, *story);
        }));

        server.Get(path("/metrics"), handler([this](const httplib::Request& req, httplib::Response& res) {
            send_json(res, session_metrics(snapshot(req.matches[1])));
        }));
    }

    json session_metrics(const Session& s) const {
        json stories = json::array();
        std::optional<double> ratio;
        if (s.reference_story && count_story_keystrokes(*s.reference_story) > 0)
            ratio = keyword_ratio(s.keywords, *s.reference_story);
        for (const auto& st : s.stories) {
            json row{{"version", st.version},
                     {"mode", to_string(st.mode)},
                     {"story_keystrokes", count_story_keystrokes(st.text)},
                     {"keyword_keystrokes", count_keyword_keystrokes(s.keywords)}};
            try {
                row["keystroke_savings"] = keystroke_savings(st.text, s.keywords);
            } catch (const Error&) {
                row["keystroke_savings"] = nullptr;
            }
            row["semantic_similarity"] = nullptr;
            if (config.embeddings && s.reference_story) {
                try {
                    row["semantic_similarity"] = semantic_similarity(st.text, *s.reference_story, *config.embeddings);
                } catch (const Error&) {
                }
            }
            stories.push_back(std::move(row));
        }
        return json{{"session_id", s.id},
                     {"keyword_ratio", ratio ? json(*ratio) : json(nullptr)},
                     {"stories", stories}};
    }
};

Service::Service(ServiceConfig config) : impl_(std::make_unique<Impl>(std::move(config))) {}

Service::~Service() {
    if (impl_) impl_->server.stop();
}

void Service::bind(const std::string& host, int port) {
    if (!impl_->server.bind_to_port(host, port))
        throw Error(ErrorCode::io, "cannot bind " + host + ":" + std::to_string(port));
}

int Service::bind_to_any_port(const std::string& host) {
    const int port = impl_->server.bind_to_any_port(host);
    if (port < 0) throw Error(ErrorCode::io, "cannot bind an ephemeral port on " + host);
    return port;
}

void Service::listen() { impl_->server.listen_after_bind(); }
void Service::stop() { impl_->server.stop(); }
bool Service::is_running() const { return impl_->server.is_running(); }
void Service::wait_until_ready() const { impl_->server.wait_until_ready(); }

} // namespace imagetalk
