#include "gp4nldr/service/server.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "gp4nldr/explain/prompt.hpp"

namespace gp4nldr::service {

using nlohmann::json;

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, std::string_view code, std::string_view message,
                std::optional<std::string> field = std::nullopt) {
    json body{{"code", code}, {"message", message}};
    if (field) body["field"] = *field;
    send_json(res, status, body);
}

std::optional<json> parse_body(const httplib::Request& req, httplib::Response& res) {
    auto body = json::parse(req.body, nullptr, false);
    if (body.is_discarded() || !body.is_object()) {
        send_error(res, 400, "invalid_json", "request body must be a JSON object");
        return std::nullopt;
    }
    return body;
}

int status_for(llm::ErrorKind kind) {
    switch (kind) {
    case llm::ErrorKind::rate_limited: return 429;
    case llm::ErrorKind::timeout: return 504;
    default: return 502;
    }
}

json messages_json(const explain::ChatSession& session) {
    json out = json::array();
    for (const auto& m : session.messages)
        out.push_back({{"role", explain::to_string(m.role)}, {"text", m.text}, {"timestamp_ms", m.timestamp_ms}});
    return out;
}

json dataset_summary(const std::string& id, const data::Dataset& ds) {
    return {{"id", id},
            {"name", ds.name()},
            {"instance_count", ds.instance_count()},
            {"feature_count", ds.feature_count()},
            {"feature_names", ds.feature_names()},
            {"label_name", ds.label_name()},
            {"class_labels", ds.label_names()}};
}

} // namespace

ProviderFactory default_provider_factory() {
    return [](bool mock, const llm::ProviderConfig& config) -> std::unique_ptr<llm::ChatProvider> {
        if (mock) return std::make_unique<llm::MockProvider>(llm::MockProvider::echo());
        if (config.api_key.empty())
            throw llm::LlmError(llm::ErrorKind::auth_failure,
                                "no API key: set GP4NLDR_LLM_API_KEY, pass model.api_key, or request the mock provider");
        return std::make_unique<llm::HttpChatProvider>(config);
    };
}

Api::Api(ServerOptions options)
    : options_(std::move(options)), jobs_(options_.max_concurrent_runs, options_.threads_per_run) {
    load_examples();
    routes();
}

Api::~Api() { stop(); }

bool Api::listen(const std::string& host, int port) { return server_.listen(host, port); }
int Api::bind_any_port(const std::string& host) { return server_.bind_to_any_port(host); }
bool Api::listen_after_bind() { return server_.listen_after_bind(); }
void Api::stop() { server_.stop(); }

void Api::load_examples() {
    if (options_.examples_dir.empty() || !std::filesystem::is_directory(options_.examples_dir)) return;
    for (const auto& entry : std::filesystem::directory_iterator(options_.examples_dir)) {
        if (entry.path().extension() != ".json") continue;
        examples_.emplace(entry.path().stem().string(),
                          std::make_shared<const SessionArchive>(load_archive_file(entry.path().string())));
    }
}

std::string Api::register_chat(std::shared_ptr<ChatEntry> entry) {
    std::lock_guard lock(mutex_);
    auto id = fmt::format("chat-{}", next_chat_++);
    chats_.emplace(id, std::move(entry));
    return id;
}

std::shared_ptr<Api::ChatEntry> Api::find_chat(const std::string& id) {
    std::lock_guard lock(mutex_);
    const auto it = chats_.find(id);
    return it == chats_.end() ? nullptr : it->second;
}

void Api::routes() {
    server_.Post("/api/datasets", [this](const httplib::Request& req, httplib::Response& res) {
        data::CsvOptions csv;
        csv.has_header = !req.has_param("has_header") || req.get_param_value("has_header") != "false";
        csv.name = req.has_param("name") ? req.get_param_value("name") : "uploaded";
        if (!req.has_param("label_col")) return send_error(res, 400, "missing_label", "label_col is required", "label_col");
        csv.label_column = data::parse_label_selector(req.get_param_value("label_col"));
        std::istringstream in(req.body);
        try {
            auto ds = std::make_shared<const data::Dataset>(data::load_csv(in, csv));
            std::string id;
            {
                std::lock_guard lock(mutex_);
                id = fmt::format("ds-{}", next_dataset_++);
                datasets_.emplace(id, ds);
            }
            send_json(res, 201, dataset_summary(id, *ds));
        } catch (const data::ParseError& e) {
            json body{{"code", "parse_error"}, {"message", e.what()}, {"row", e.row()}, {"column", e.col()}};
            send_json(res, 400, body);
        } catch (const std::exception& e) {
            send_error(res, 400, "invalid_dataset", e.what());
        }
    });

    server_.Get(R"(/api/datasets/([^/]+)/preview)", [this](const httplib::Request& req, httplib::Response& res) {
        std::shared_ptr<const data::Dataset> ds;
        {
            std::lock_guard lock(mutex_);
            const auto it = datasets_.find(req.matches[1]);
            if (it != datasets_.end()) ds = it->second;
        }
        if (!ds) return send_error(res, 404, "not_found", "unknown dataset");
        json rows = json::array();
        for (std::size_t i = 0; i < std::min(options_.preview_rows, ds->instance_count()); ++i) {
            const auto row = ds->rows().row(i);
            const auto scaled = ds->scaled().row(i);
            rows.push_back({{"values", std::vector<double>(row.begin(), row.end())},
                            {"scaled", std::vector<double>(scaled.begin(), scaled.end())},
                            {"label", ds->labels()[i]}});
        }
        auto body = dataset_summary(req.matches[1], *ds);
        body["rows"] = rows;
        send_json(res, 200, body);
    });

    server_.Post("/api/runs", [this](const httplib::Request& req, httplib::Response& res) {
        const auto body = parse_body(req, res);
        if (!body) return;
        std::shared_ptr<const data::Dataset> ds;
        {
            std::lock_guard lock(mutex_);
            const auto it = datasets_.find(body->value("dataset_id", std::string()));
            if (it != datasets_.end()) ds = it->second;
        }
        if (!ds) return send_error(res, 404, "not_found", "unknown dataset", "dataset_id");
        try {
            auto config = run_config_from_json(body->value("config", json::object()));
            if (auto issues = gp::validate(config); !issues.empty())
                return send_error(res, 400, "invalid_config", issues.front().message, issues.front().field);
            const auto id = jobs_.submit(ds, std::move(config));
            send_json(res, 202, {{"id", id}, {"state", "queued"}});
        } catch (const gp::ConfigError& e) {
            send_error(res, 400, "invalid_config", e.issue().message, e.issue().field);
        }
    });

    server_.Get(R"(/api/runs/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
        const auto status = jobs_.status(req.matches[1]);
        if (!status) return send_error(res, 404, "not_found", "unknown run");
        json body{{"id", req.matches[1]},
                  {"state", to_string(status->state)},
                  {"generation", status->generation},
                  {"generations", status->generations},
                  {"fitness_history", status->fitness_history},
                  {"created_ms", status->created_ms},
                  {"updated_ms", status->updated_ms}};
        if (status->state == JobState::failed) body["error"] = status->error;
        send_json(res, 200, body);
    });

    server_.Get(R"(/api/runs/([^/]+)/result)", [this](const httplib::Request& req, httplib::Response& res) {
        const auto status = jobs_.status(req.matches[1]);
        if (!status) return send_error(res, 404, "not_found", "unknown run");
        if (status->state == JobState::failed) return send_error(res, 409, "run_failed", status->error);
        if (status->state != JobState::done) return send_error(res, 409, "not_ready", "run has not finished");
        send_json(res, 200, archive_to_json({*status->result, std::nullopt}));
    });

    server_.Get("/api/examples", [this](const httplib::Request&, httplib::Response& res) {
        json list = json::array();
        for (const auto& [id, archive] : examples_) {
            const auto& r = archive->result;
            list.push_back({{"id", id},
                            {"dataset", r.dataset.name},
                            {"fitness", fitness::to_string(r.config.fitness_id)},
                            {"final_dimensions", r.config.final_dimensions},
                            {"accuracy_original", r.accuracy_original},
                            {"accuracy_embedding", r.accuracy_embedding}});
        }
        send_json(res, 200, list);
    });

    server_.Get(R"(/api/examples/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
        const auto it = examples_.find(req.matches[1]);
        if (it == examples_.end()) return send_error(res, 404, "not_found", "unknown example");
        send_json(res, 200, archive_to_json(*it->second));
    });

    server_.Post("/api/chat/sessions", [this](const httplib::Request& req, httplib::Response& res) {
        const auto body = parse_body(req, res);
        if (!body) return;
        std::shared_ptr<const gp::RunResult> result;
        if (body->contains("run_id")) {
            const auto status = jobs_.status(body->value("run_id", std::string()));
            if (!status) return send_error(res, 404, "not_found", "unknown run", "run_id");
            if (status->state != JobState::done) return send_error(res, 409, "not_ready", "run has not finished", "run_id");
            result = status->result;
        } else if (body->contains("example_id")) {
            const auto it = examples_.find(body->value("example_id", std::string()));
            if (it == examples_.end()) return send_error(res, 404, "not_found", "unknown example", "example_id");
            result = std::make_shared<const gp::RunResult>(it->second->result);
        } else {
            return send_error(res, 400, "missing_field", "run_id or example_id is required", "run_id");
        }
        const json limit = body->contains("word_limit") ? body->at("word_limit") : json();
        if (!limit.is_null() && (!limit.is_number_integer() || limit.get<long long>() <= 0))
            return send_error(res, 400, "invalid_field", "word_limit must be a positive integer", "word_limit");
        auto provider_config = llm::ProviderConfig::from_environment();
        const auto model = body->value("model", json::object());
        if (!model.is_object()) return send_error(res, 400, "invalid_field", "model must be an object", "model");
        try {
            provider_config.model_id = model.value("model_id", provider_config.model_id);
            provider_config.api_key = model.value("api_key", provider_config.api_key);
            provider_config.temperature = model.value("temperature", provider_config.temperature);
        } catch (const json::exception&) {
            return send_error(res, 400, "invalid_field", "model fields have the wrong type", "model");
        }
        const bool mock = body->value("mock", false);

        auto entry = std::make_shared<ChatEntry>();
        entry->result = std::move(result);
        entry->session.run_ref = body->contains("run_id") ? body->value("run_id", std::string()) : body->value("example_id", std::string());
        entry->session.word_limit = limit.is_null() ? entry->session.word_limit : limit.get<std::size_t>();
        entry->session.model_id = mock ? "mock-echo" : provider_config.model_id;
        try {
            entry->provider = options_.providers(mock, provider_config);
            explain::advance_session(entry->session, explain::kInitialQuestion, options_.explainer, *entry->result, *entry->provider);
        } catch (const llm::LlmError& e) {
            return send_error(res, status_for(e.kind()), llm::to_string(e.kind()), e.what());
        }
        const auto id = register_chat(entry);
        send_json(res, 201, {{"id", id}, {"word_limit", entry->session.word_limit}, {"model_id", entry->session.model_id},
                             {"messages", messages_json(entry->session)}});
    });

    server_.Post(R"(/api/chat/sessions/([^/]+)/messages)", [this](const httplib::Request& req, httplib::Response& res) {
        const auto body = parse_body(req, res);
        if (!body) return;
        const auto entry = find_chat(req.matches[1]);
        if (!entry) return send_error(res, 404, "not_found", "unknown chat session");
        const auto text = body->value("text", std::string());
        if (text.empty()) return send_error(res, 400, "missing_field", "text is required", "text");
        std::unique_lock busy(entry->busy, std::try_to_lock);
        if (!busy.owns_lock()) return send_error(res, 409, "busy", "a question is already in progress for this session");
        try {
            const auto exchange = explain::advance_session(entry->session, text, options_.explainer, *entry->result, *entry->provider);
            send_json(res, 200, {{"answer", exchange.answer}, {"retrieved", exchange.retrieved}, {"messages", messages_json(entry->session)}});
        } catch (const llm::LlmError& e) {
            send_error(res, status_for(e.kind()), llm::to_string(e.kind()), e.what());
        }
    });

    server_.Get(R"(/api/chat/sessions/([^/]+)/export)", [this](const httplib::Request& req, httplib::Response& res) {
        const auto entry = find_chat(req.matches[1]);
        if (!entry) return send_error(res, 404, "not_found", "unknown chat session");
        std::lock_guard busy(entry->busy);
        res.set_header("Content-Disposition", "attachment; filename=\"session.json\"");
        res.status = 200;
        res.set_content(export_archive({*entry->result, entry->session}), "application/json");
    });

    server_.Post("/api/sessions/import", [this](const httplib::Request& req, httplib::Response& res) {
        try {
            auto archive = import_archive(req.body);
            const bool mock = req.has_param("mock") && req.get_param_value("mock") == "true";
            auto entry = std::make_shared<ChatEntry>();
            entry->result = std::make_shared<const gp::RunResult>(std::move(archive.result));
            if (archive.chat) {
                entry->session = std::move(*archive.chat);
            } else {
                entry->session.run_ref = entry->result->dataset.name;
            }
            auto provider_config = llm::ProviderConfig::from_environment();
            if (!mock && !entry->session.model_id.empty() && entry->session.model_id != "mock-echo")
                provider_config.model_id = entry->session.model_id;
            try {
                entry->provider = options_.providers(mock, provider_config);
            } catch (const llm::LlmError& e) {
                return send_error(res, status_for(e.kind()), llm::to_string(e.kind()), e.what());
            }
            const auto id = register_chat(entry);
            send_json(res, 201, {{"id", id}, {"word_limit", entry->session.word_limit}, {"messages", messages_json(entry->session)}});
        } catch (const ArchiveError& e) {
            send_error(res, 400, e.kind() == ArchiveError::Kind::version_mismatch ? "version_mismatch" : "parse_error", e.what());
        }
    });

    server_.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        try {
            std::rethrow_exception(ep);
        } catch (const std::exception& e) {
            send_error(res, 500, "internal_error", e.what());
        }
    });
}

} // namespace gp4nldr::service
