#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include <httplib.h>

#include "gp4nldr/explain/session.hpp"
#include "gp4nldr/llm/client.hpp"
#include "gp4nldr/service/archive.hpp"
#include "gp4nldr/service/jobs.hpp"

namespace gp4nldr::service {

/// Builds the provider for a new chat session. `mock` asks for the echo provider; `config` is the
/// environment configuration with any per-session overrides applied.
using ProviderFactory = std::function<std::unique_ptr<llm::ChatProvider>(bool mock, const llm::ProviderConfig& config)>;

/// Echo provider when `mock` is set, otherwise an HTTP provider for `config`.
[[nodiscard]] ProviderFactory default_provider_factory();

struct ServerOptions {
    /// Directory of ready-made session archives (`*.json`), exposed as examples.
    std::filesystem::path examples_dir;
    explain::Explainer explainer;
    ProviderFactory providers = default_provider_factory();
    std::size_t max_concurrent_runs = 2;
    std::size_t threads_per_run = 1;
    std::size_t preview_rows = 10;
};

/// JSON API over datasets, runs, examples and chat sessions. Errors are `{code, message, field?}`.
class Api {
public:
    explicit Api(ServerOptions options);
    ~Api();

    Api(const Api&) = delete;
    Api& operator=(const Api&) = delete;

    [[nodiscard]] httplib::Server& http() noexcept { return server_; }
    /// Blocks until stop() is called.
    bool listen(const std::string& host, int port);
    /// Binds an ephemeral port and returns it; serve with listen_after_bind().
    int bind_any_port(const std::string& host);
    bool listen_after_bind();
    void stop();

    [[nodiscard]] JobRunner& jobs() noexcept { return jobs_; }

private:
    struct ChatEntry {
        std::mutex busy;
        std::shared_ptr<const gp::RunResult> result;
        explain::ChatSession session;
        std::unique_ptr<llm::ChatProvider> provider;
    };

    void routes();
    void load_examples();
    std::string register_chat(std::shared_ptr<ChatEntry> entry);
    std::shared_ptr<ChatEntry> find_chat(const std::string& id);

    ServerOptions options_;
    httplib::Server server_;
    JobRunner jobs_;
    std::mutex mutex_;
    std::map<std::string, std::shared_ptr<const data::Dataset>> datasets_;
    std::map<std::string, std::shared_ptr<const SessionArchive>> examples_;
    std::map<std::string, std::shared_ptr<ChatEntry>> chats_;
    std::size_t next_dataset_ = 1;
    std::size_t next_chat_ = 1;
};

} // namespace gp4nldr::service
