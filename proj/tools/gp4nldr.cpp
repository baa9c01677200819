#include <csignal>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>
#include <json.hpp>

#include "gp4nldr/data.hpp"
#include "gp4nldr/explain/prompt.hpp"
#include "gp4nldr/explain/rag.hpp"
#include "gp4nldr/explain/session.hpp"
#include "gp4nldr/llm/client.hpp"
#include "gp4nldr/service/archive.hpp"
#include "gp4nldr/service/pipeline.hpp"
#include "gp4nldr/service/server.hpp"

namespace fs = std::filesystem;
using namespace gp4nldr;
using nlohmann::json;

namespace {

constexpr int kRuntimeFailure = 1;
constexpr int kUsageError = 2;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RunFlags {
    std::string dataset;
    std::string label_col;
    std::string name;
    bool no_header = false;
    std::string fitness = "gpmal";
    std::size_t dims = 2;
    std::size_t pop = 100;
    std::size_t gens = 100;
    std::string bloat = "lexicographic";
    double p_smaller = gp::DoubleTournament{}.p_smaller;
    bool size_first = false;
    double tarpeian_p = gp::Tarpeian{}.p;
    std::uint64_t seed = 1;
    std::size_t threads = 1;
    std::size_t subsample = 0;
    std::string out;
    bool progress = false;
};

struct ChatFlags {
    std::string result;
    std::vector<std::string> questions;
    bool mock = false;
    bool show_prompt = false;
    std::string store;
    std::string prompt_template;
    std::optional<std::size_t> word_limit;
    std::string model;
    std::string save;
};

struct StoreFlags {
    std::string docs;
    std::string out;
    std::string config;
};

struct ServeFlags {
    std::string host = "127.0.0.1";
    int port = 8080;
    std::string examples;
    std::string store;
    std::size_t max_jobs = 2;
    std::size_t threads_per_run = 1;
};

fs::path asset_path(const std::string& relative) { return fs::path(GP4NLDR_ASSET_DIR) / relative; }

std::string flag_for(const std::string& field) {
    if (field == "population_size") return "pop";
    if (field == "generations") return "gens";
    if (field == "final_dimensions") return "dims";
    if (field == "bloat") return "bloat";
    return field;
}

gp::BloatControl bloat_from_flags(const RunFlags& f) {
    if (f.bloat == "none") return gp::NoBloatControl{};
    if (f.bloat == "lexicographic") return gp::Lexicographic{};
    if (f.bloat == "double") return gp::DoubleTournament{!f.size_first, f.p_smaller};
    return gp::Tarpeian{f.tarpeian_p};
}

int cmd_run(const RunFlags& f, bool as_json) {
    gp::RunConfig config;
    config.population_size = f.pop;
    config.generations = f.gens;
    config.final_dimensions = f.dims;
    config.fitness_id = *fitness::parse_fitness_id(f.fitness);
    config.bloat = bloat_from_flags(f);
    config.seed = f.seed;
    if (auto issues = gp::validate(config); !issues.empty())
        throw UsageError(fmt::format("invalid --{}: {}", flag_for(issues.front().field), issues.front().message));

    data::CsvOptions csv;
    csv.has_header = !f.no_header;
    csv.label_column = data::parse_label_selector(f.label_col);
    csv.name = f.name.empty() ? fs::path(f.dataset).stem().string() : f.name;
    auto dataset = data::load_csv_file(f.dataset, csv);
    if (f.subsample > 0) dataset = data::stratified_subsample(dataset, f.subsample, f.seed);

    service::PipelineOptions options;
    options.threads = f.threads;
    if (f.progress)
        options.on_generation = [&](std::size_t gen, const std::vector<double>& history) {
            fmt::print(stderr, "generation {}/{} best {:.6f}\n", gen, config.generations, history.back());
        };
    const auto result = service::execute_run(dataset, config, options);
    const service::SessionArchive archive{result, std::nullopt};
    if (!f.out.empty()) service::save_archive_file(f.out, archive);

    if (as_json) {
        json summary{{"dataset", result.dataset.name},
                     {"instances", result.dataset.instance_count},
                     {"expressions", result.expressions},
                     {"best_fitness", result.best_individual.fitness},
                     {"accuracy_original", result.accuracy_original},
                     {"accuracy_embedding", result.accuracy_embedding}};
        if (!f.out.empty()) summary["out"] = f.out;
        fmt::print("{}\n", summary.dump());
    } else if (f.out.empty()) {
        fmt::print("{}", service::export_archive(archive));
    } else {
        fmt::print("dataset {} ({} instances, {} features)\n", result.dataset.name, result.dataset.instance_count,
                   result.dataset.feature_names.size());
        for (std::size_t i = 0; i < result.expressions.size(); ++i) fmt::print("dimension {}: {}\n", i + 1, result.expressions[i]);
        fmt::print("best fitness {:.6f}\n", result.best_individual.fitness);
        fmt::print("accuracy original {:.4f} embedding {:.4f}\n", result.accuracy_original, result.accuracy_embedding);
        fmt::print("wrote {}\n", f.out);
    }
    return 0;
}

explain::VectorStore load_or_build_store(const std::string& store_path) {
    if (!store_path.empty()) return explain::VectorStore::load(store_path);
    if (fs::exists(asset_path("store.json"))) return explain::VectorStore::load(asset_path("store.json"));
    const auto config = explain::load_rag_config(asset_path("rag_config.json"));
    return explain::build_store(explain::load_documents(asset_path("background")), config);
}

explain::Explainer make_explainer(const std::string& template_path, const std::string& store_path) {
    explain::Explainer explainer;
    explainer.prompt = explain::PromptTemplate::load(template_path.empty() ? asset_path("prompt/template.txt") : fs::path(template_path));
    explainer.store = load_or_build_store(store_path);
    explainer.top_k = explain::load_rag_config(asset_path("rag_config.json")).top_k;
    return explainer;
}

int cmd_chat(const ChatFlags& f, bool as_json) {
    auto archive = service::load_archive_file(f.result);
    const auto explainer = make_explainer(f.prompt_template, f.store);

    explain::ChatSession session = archive.chat.value_or(explain::ChatSession{});
    if (!archive.chat) session.run_ref = archive.result.dataset.name;
    if (f.word_limit) session.word_limit = *f.word_limit;

    if (f.show_prompt) {
        const std::string question = f.questions.empty() ? std::string(explain::kInitialQuestion) : f.questions.front();
        const auto exchange = explain::prepare_exchange(session, question, explainer, archive.result);
        if (as_json)
            fmt::print("{}\n", json{{"question", question}, {"prompt", exchange.prompt}, {"retrieved", exchange.retrieved}}.dump());
        else
            fmt::print("{}", exchange.prompt);
        return 0;
    }

    std::unique_ptr<llm::ChatProvider> provider;
    if (f.mock) {
        provider = std::make_unique<llm::MockProvider>(llm::MockProvider::echo());
        session.model_id = "mock-echo";
    } else {
        auto config = llm::ProviderConfig::from_environment();
        if (!f.model.empty()) config.model_id = f.model;
        if (config.api_key.empty()) {
            fmt::print(stderr,
                       "error: no API key configured. Set GP4NLDR_LLM_API_KEY (and optionally GP4NLDR_LLM_BASE_URL, "
                       "GP4NLDR_LLM_MODEL), or pass --mock for the offline echo provider.\n");
            return kRuntimeFailure;
        }
        session.model_id = config.model_id;
        provider = std::make_unique<llm::HttpChatProvider>(config);
    }

    std::vector<std::string> questions = f.questions;
    if (questions.empty()) questions.emplace_back(explain::kInitialQuestion);
    json transcript = json::array();
    for (const auto& q : questions) {
        const auto before = session.messages.size();
        const auto exchange = explain::advance_session(session, q, explainer, archive.result, *provider);
        for (std::size_t i = before; i + 1 < session.messages.size(); i += 2) {
            const auto& asked = session.messages[i].text;
            const auto& answer = session.messages[i + 1].text;
            if (as_json)
                transcript.push_back({{"question", asked}, {"answer", answer}, {"retrieved", i + 2 == session.messages.size() ? exchange.retrieved : std::vector<std::string>{}}});
            else
                fmt::print("Human: {}\nAI: {}\n\n", asked, answer);
        }
    }
    if (as_json) fmt::print("{}\n", transcript.dump());
    if (!f.save.empty()) {
        archive.chat = session;
        service::save_archive_file(f.save, archive);
    }
    return 0;
}

int cmd_store_build(const StoreFlags& f, bool as_json) {
    if (!fs::is_directory(f.docs)) throw std::runtime_error(fmt::format("'{}' is not a directory", f.docs));
    const auto config = explain::load_rag_config(f.config.empty() ? asset_path("rag_config.json") : fs::path(f.config));
    const auto docs = explain::load_documents(f.docs);
    if (docs.empty()) fmt::print(stderr, "warning: no .txt or .md documents in '{}'; writing an empty store\n", f.docs);
    const auto store = explain::build_store(docs, config);
    store.save(f.out);
    if (as_json)
        fmt::print("{}\n", json{{"documents", docs.size()}, {"chunks", store.size()}, {"out", f.out}}.dump());
    else
        fmt::print("{} chunks from {} documents written to {}\n", store.size(), docs.size(), f.out);
    return 0;
}

service::Api* g_api = nullptr;

int cmd_serve(const ServeFlags& f) {
    service::ServerOptions options;
    options.examples_dir = f.examples.empty() ? asset_path("examples") : fs::path(f.examples);
    options.explainer = make_explainer("", f.store);
    options.max_concurrent_runs = f.max_jobs;
    options.threads_per_run = f.threads_per_run;
    service::Api api(std::move(options));
    g_api = &api;
    std::signal(SIGINT, [](int) {
        if (g_api) g_api->stop();
    });
    std::signal(SIGTERM, [](int) {
        if (g_api) g_api->stop();
    });
    fmt::print(stderr, "listening on http://{}:{}\n", f.host, f.port);
    if (!api.listen(f.host, f.port)) {
        fmt::print(stderr, "error: cannot listen on {}:{}\n", f.host, f.port);
        return kRuntimeFailure;
    }
    g_api = nullptr;
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Evolve interpretable nonlinear embeddings with genetic programming and discuss them with a chat model."};
    app.require_subcommand(1);
    bool as_json = false;
    app.add_flag("--json", as_json, "Machine-readable output");

    RunFlags run;
    auto* run_cmd = app.add_subcommand("run", "Evolve an embedding for a CSV dataset and score it");
    run_cmd->add_option("--dataset", run.dataset, "CSV file")->required()->check(CLI::ExistingFile);
    run_cmd->add_option("--label-col", run.label_col, "Label column: 0-based index or header name")->required();
    run_cmd->add_option("--name", run.name, "Dataset name (default: file stem)");
    run_cmd->add_flag("--no-header", run.no_header, "The first row is data");
    run_cmd->add_option("--fitness", run.fitness, "Fitness function")->check(CLI::IsMember({"gpmal", "gpmal2", "nrmse"}))->capture_default_str();
    run_cmd->add_option("--dims", run.dims, "Embedding dimensions")->capture_default_str();
    run_cmd->add_option("--pop", run.pop, "Population size")->capture_default_str();
    run_cmd->add_option("--gens", run.gens, "Generations")->capture_default_str();
    run_cmd->add_option("--bloat", run.bloat, "Bloat control")
        ->check(CLI::IsMember({"none", "lexicographic", "double", "tarpeian"}))
        ->capture_default_str();
    run_cmd->add_option("--p-smaller", run.p_smaller, "Double tournament: chance the smaller entrant wins")->check(CLI::Range(0.0, 1.0))->capture_default_str();
    run_cmd->add_flag("--size-first", run.size_first, "Double tournament: size round before fitness round");
    run_cmd->add_option("--tarpeian-p", run.tarpeian_p, "Tarpeian penalty probability")->check(CLI::Range(0.0, 1.0))->capture_default_str();
    run_cmd->add_option("--seed", run.seed, "Random seed")->capture_default_str();
    run_cmd->add_option("--threads", run.threads, "Worker threads (0 = all cores)")->capture_default_str();
    run_cmd->add_option("--subsample", run.subsample, "Stratified subsample size (0 = all rows)")->capture_default_str();
    run_cmd->add_option("--out", run.out, "Write the session archive here");
    run_cmd->add_flag("--progress", run.progress, "Report each generation on stderr");

    ChatFlags chat;
    auto* chat_cmd = app.add_subcommand("chat", "Ask questions about a result archive");
    chat_cmd->add_option("--result", chat.result, "Session archive")->required()->check(CLI::ExistingFile);
    chat_cmd->add_option("--question", chat.questions, "Question (repeatable)");
    chat_cmd->add_flag("--mock", chat.mock, "Use the offline echo provider");
    chat_cmd->add_flag("--show-prompt", chat.show_prompt, "Print the prompt for the first --question (or the summary request) against the current history and exit");
    chat_cmd->add_option("--store", chat.store, "Vector store file")->check(CLI::ExistingFile);
    chat_cmd->add_option("--template", chat.prompt_template, "Prompt template file")->check(CLI::ExistingFile);
    chat_cmd->add_option("--word-limit", chat.word_limit, "Answer word limit")->check(CLI::PositiveNumber);
    chat_cmd->add_option("--model", chat.model, "Model id");
    chat_cmd->add_option("--save", chat.save, "Write the archive with the transcript here");

    StoreFlags store;
    auto* store_cmd = app.add_subcommand("store", "Manage the background vector store");
    store_cmd->require_subcommand(1);
    auto* build_cmd = store_cmd->add_subcommand("build", "Chunk and index a directory of .txt/.md documents");
    build_cmd->add_option("--docs", store.docs, "Document directory")->required();
    build_cmd->add_option("--out", store.out, "Store file")->required();
    build_cmd->add_option("--config", store.config, "Retrieval config JSON")->check(CLI::ExistingFile);

    ServeFlags serve;
    auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP API");
    serve_cmd->add_option("--host", serve.host)->capture_default_str();
    serve_cmd->add_option("--port", serve.port)->check(CLI::Range(1, 65535))->capture_default_str();
    serve_cmd->add_option("--examples", serve.examples, "Directory of example archives");
    serve_cmd->add_option("--store", serve.store, "Vector store file")->check(CLI::ExistingFile);
    serve_cmd->add_option("--max-jobs", serve.max_jobs, "Concurrent runs")->check(CLI::PositiveNumber)->capture_default_str();
    serve_cmd->add_option("--threads-per-run", serve.threads_per_run)->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsageError;
    }

    try {
        if (*run_cmd) return cmd_run(run, as_json);
        if (*chat_cmd) return cmd_chat(chat, as_json);
        if (*build_cmd) return cmd_store_build(store, as_json);
        if (*serve_cmd) return cmd_serve(serve);
    } catch (const UsageError& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return kUsageError;
    } catch (const std::exception& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return kRuntimeFailure;
    }
    return kUsageError;
}
