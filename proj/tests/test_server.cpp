#include <doctest.h>

#include <atomic>
#include <chrono>
#include <future>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "gp4nldr/service/server.hpp"
#include "support.hpp"

using namespace gp4nldr;
using namespace gp4nldr::service;
using namespace std::chrono_literals;
using nlohmann::json;

namespace {

constexpr const char* kSecret = "sk-never-echo-this";

// Echo provider that can be told to hold replies until released.
class GatedProvider final : public llm::ChatProvider {
public:
    explicit GatedProvider(std::shared_future<void> gate, std::shared_ptr<std::atomic<bool>> closed)
        : gate_(std::move(gate)), closed_(std::move(closed)) {}
    std::string complete(std::span<const llm::Message> messages) override {
        if (closed_->load()) gate_.wait();
        return echo_.complete(messages);
    }

private:
    std::shared_future<void> gate_;
    std::shared_ptr<std::atomic<bool>> closed_;
    llm::MockProvider echo_ = llm::MockProvider::echo();
};

struct Harness {
    std::promise<void> release;
    std::shared_future<void> gate = release.get_future().share();
    std::shared_ptr<std::atomic<bool>> closed = std::make_shared<std::atomic<bool>>(false);
    std::vector<llm::ProviderConfig> seen_configs;
    std::mutex seen_mutex;
    std::unique_ptr<Api> api;
    std::thread thread;
    int port = 0;

    Harness() {
        ServerOptions options;
        options.examples_dir = support::asset("examples");
        options.explainer.prompt = explain::PromptTemplate::load(support::asset("prompt/template.txt"));
        options.explainer.store = explain::build_store(explain::load_documents(support::asset("background")),
                                                       explain::load_rag_config(support::asset("rag_config.json")));
        options.providers = [this](bool mock, const llm::ProviderConfig& config) -> std::unique_ptr<llm::ChatProvider> {
            {
                std::lock_guard lock(seen_mutex);
                seen_configs.push_back(config);
            }
            if (!mock && config.api_key.empty()) throw llm::LlmError(llm::ErrorKind::auth_failure, "no API key");
            if (config.model_id == "rate-limited") throw llm::LlmError(llm::ErrorKind::rate_limited, "slow down");
            return std::make_unique<GatedProvider>(gate, closed);
        };
        options.max_concurrent_runs = 1;
        api = std::make_unique<Api>(std::move(options));
        port = api->bind_any_port("127.0.0.1");
        thread = std::thread([this] { api->listen_after_bind(); });
        api->http().wait_until_ready();
    }
    ~Harness() {
        if (closed->load()) {
            closed->store(false);
            release.set_value();
        }
        api->stop();
        thread.join();
    }
    httplib::Client client() const {
        httplib::Client c("127.0.0.1", port);
        c.set_read_timeout(60s);
        return c;
    }
};

json body_of(const httplib::Result& r) {
    REQUIRE(r);
    return json::parse(r->body);
}

std::string upload_wine(const Harness& h) {
    auto c = h.client();
    const auto r = c.Post("/api/datasets?label_col=class&name=wine", support::read_file(support::asset("datasets/wine.csv")), "text/csv");
    REQUIRE(r);
    REQUIRE(r->status == 201);
    return body_of(r)["id"];
}

json finished_run(const Harness& h, const std::string& dataset_id, json config) {
    auto c = h.client();
    const auto r = c.Post("/api/runs", json{{"dataset_id", dataset_id}, {"config", config}}.dump(), "application/json");
    REQUIRE(r);
    REQUIRE(r->status == 202);
    const std::string id = body_of(r)["id"];
    for (int i = 0; i < 6000; ++i) {
        const auto s = body_of(c.Get("/api/runs/" + id));
        if (s["state"] == "done" || s["state"] == "failed") return s;
        std::this_thread::sleep_for(10ms);
    }
    FAIL("run did not finish");
    return {};
}

} // namespace

TEST_CASE("dataset upload and preview") {
    Harness h;
    auto c = h.client();
    const auto r = c.Post("/api/datasets?label_col=class&name=wine", support::read_file(support::asset("datasets/wine.csv")), "text/csv");
    REQUIRE(r);
    CHECK(r->status == 201);
    const auto summary = body_of(r);
    CHECK(summary["instance_count"] == 178);
    CHECK(summary["feature_count"] == 13);
    CHECK(summary["feature_names"][0] == "alcohol");
    CHECK(summary["class_labels"].size() == 3);

    const auto p = c.Get("/api/datasets/" + summary["id"].get<std::string>() + "/preview");
    REQUIRE(p);
    CHECK(p->status == 200);
    const auto preview = body_of(p);
    REQUIRE(preview["rows"].size() == 10);
    CHECK(preview["rows"][0]["values"].size() == 13);
    CHECK(preview["rows"][0]["values"][0] == 14.23);
    for (const auto& v : preview["rows"][0]["scaled"]) {
        CHECK(v.get<double>() >= 0.0);
        CHECK(v.get<double>() <= 1.0);
    }

    CHECK(c.Get("/api/datasets/ds-999/preview")->status == 404);
}

TEST_CASE("headerless uploads with a positional label") {
    Harness h;
    auto c = h.client();
    const auto r = c.Post("/api/datasets?label_col=2&has_header=false", "1,2,a\n3,4,b\n5,6,a\n", "text/csv");
    REQUIRE(r);
    CHECK(r->status == 201);
    const auto s = body_of(r);
    CHECK(s["feature_names"] == json::array({"f0", "f1"}));
    CHECK(s["instance_count"] == 3);
}

TEST_CASE("malformed uploads report the position") {
    Harness h;
    auto c = h.client();
    const auto r = c.Post("/api/datasets?label_col=y", "a,b,y\n1,2,x\n3,oops,x\n", "text/csv");
    REQUIRE(r);
    CHECK(r->status == 400);
    const auto e = body_of(r);
    CHECK(e["code"] == "parse_error");
    CHECK(e["row"] == 3);
    CHECK(e["column"] == 2);

    const auto missing = c.Post("/api/datasets", "a,y\n1,x\n", "text/csv");
    REQUIRE(missing);
    CHECK(missing->status == 400);
    CHECK(body_of(missing)["field"] == "label_col");
}

TEST_CASE("run lifecycle over HTTP") {
    Harness h;
    const auto ds = upload_wine(h);
    auto c = h.client();
    const auto status = finished_run(h, ds, {{"population_size", 20}, {"generations", 4}, {"seed", 3}});
    CHECK(status["state"] == "done");
    CHECK(status["generation"] == 4);
    CHECK(status["generations"] == 4);
    CHECK(status["fitness_history"].size() == 4);

    const auto r = c.Get("/api/runs/" + status["id"].get<std::string>() + "/result");
    REQUIRE(r);
    CHECK(r->status == 200);
    const auto result = body_of(r);
    CHECK(result["expressions"].size() == 2);
    CHECK(result["embedding"].size() == 178);
    CHECK(result["config"]["seed"] == 3);
    CHECK(result["accuracy"]["original"].get<double>() > 0.8);
    CHECK_FALSE(result.contains("chat"));

    CHECK(c.Get("/api/runs/run-999")->status == 404);
    CHECK(c.Get("/api/runs/run-999/result")->status == 404);
}

TEST_CASE("results of unfinished runs are not ready") {
    Harness h;
    const auto ds = upload_wine(h);
    auto c = h.client();
    // a long run occupies the only worker, so the second stays queued
    const auto long_run = body_of(c.Post("/api/runs", json{{"dataset_id", ds}, {"config", {{"generations", 100000}}}}.dump(), "application/json"));
    const auto queued = body_of(c.Post("/api/runs", json{{"dataset_id", ds}, {"config", {{"generations", 2}}}}.dump(), "application/json"));
    CHECK(queued["state"] == "queued");
    const auto r = c.Get("/api/runs/" + queued["id"].get<std::string>() + "/result");
    REQUIRE(r);
    CHECK(r->status == 409);
    CHECK(body_of(r)["code"] == "not_ready");
    const auto s = body_of(c.Get("/api/runs/" + queued["id"].get<std::string>()));
    CHECK(s["state"] == "queued");
    CHECK(s["generation"] == 0);

    const auto chat = c.Post("/api/chat/sessions", json{{"run_id", long_run["id"]}, {"mock", true}}.dump(), "application/json");
    REQUIRE(chat);
    CHECK(chat->status == 409);
}

TEST_CASE("invalid run configurations are rejected with the field") {
    Harness h;
    const auto ds = upload_wine(h);
    auto c = h.client();
    auto post = [&](const json& body) {
        const auto r = c.Post("/api/runs", body.dump(), "application/json");
        REQUIRE(r);
        return std::make_pair(r->status, body_of(r));
    };
    auto [s1, b1] = post({{"dataset_id", ds}, {"config", {{"final_dimensions", 0}}}});
    CHECK(s1 == 400);
    CHECK(b1["code"] == "invalid_config");
    CHECK(b1["field"] == "final_dimensions");
    auto [s2, b2] = post({{"dataset_id", ds}, {"config", {{"population_size", -1}}}});
    CHECK(s2 == 400);
    CHECK(b2["field"] == "population_size");
    auto [s3, b3] = post({{"dataset_id", ds}, {"config", {{"bloat", {{"method", "double"}, {"p_smaller", 2}}}}}});
    CHECK(s3 == 400);
    CHECK(b3["field"] == "bloat.p_smaller");
    auto [s4, b4] = post({{"dataset_id", "ds-404"}});
    CHECK(s4 == 404);
    CHECK(b4["field"] == "dataset_id");

    const auto junk = c.Post("/api/runs", "{not json", "application/json");
    REQUIRE(junk);
    CHECK(junk->status == 400);
    CHECK(body_of(junk)["code"] == "invalid_json");
}

TEST_CASE("examples are listed with their configurations") {
    Harness h;
    auto c = h.client();
    const auto list = body_of(c.Get("/api/examples"));
    std::map<std::string, json> by_id;
    for (const auto& e : list) by_id[e["id"]] = e;
    REQUIRE(by_id.count("wine"));
    REQUIRE(by_id.count("dermatology"));
    REQUIRE(by_id.count("coil20"));
    CHECK(by_id["wine"]["fitness"] == "gpmal");
    CHECK(by_id["wine"]["final_dimensions"] == 2);
    CHECK(by_id["dermatology"]["fitness"] == "gpmal2");
    CHECK(by_id["dermatology"]["final_dimensions"] == 3);
    CHECK(by_id["coil20"]["fitness"] == "gpmal2");
    CHECK(by_id["coil20"]["final_dimensions"] == 2);

    const auto wine = body_of(c.Get("/api/examples/wine"));
    CHECK(wine["dataset"]["instance_count"] == 178);
    CHECK(wine["expressions"].size() == 2);
    CHECK(c.Get("/api/examples/iris")->status == 404);
}

TEST_CASE("a chat on an example opens with the summary and answers follow-ups") {
    Harness h;
    auto c = h.client();
    const auto r = c.Post("/api/chat/sessions",
                          json{{"example_id", "wine"}, {"mock", true}, {"word_limit", 40}, {"model", {{"api_key", kSecret}}}}.dump(),
                          "application/json");
    REQUIRE(r);
    CHECK(r->status == 201);
    CHECK(r->body.find(kSecret) == std::string::npos);
    const auto chat = body_of(r);
    CHECK(chat["word_limit"] == 40);
    REQUIRE(chat["messages"].size() == 2);
    CHECK(chat["messages"][0]["role"] == "human");
    CHECK(chat["messages"][0]["text"] == "Provide an exciting summary of the results");
    CHECK(chat["messages"][1]["role"] == "ai");
    const std::string id = chat["id"];

    const auto q = c.Post("/api/chat/sessions/" + id + "/messages", json{{"text", "How does GP-MAL work?"}}.dump(), "application/json");
    REQUIRE(q);
    CHECK(q->status == 200);
    const auto reply = body_of(q);
    CHECK(reply["answer"].get<std::string>().ends_with("How does GP-MAL work?"));
    CHECK_FALSE(reply["retrieved"].empty());
    CHECK(reply["messages"].size() == 4);

    const auto plain = body_of(c.Post("/api/chat/sessions/" + id + "/messages", json{{"text", "what is hue?"}}.dump(), "application/json"));
    CHECK(plain["retrieved"].empty());

    CHECK(c.Post("/api/chat/sessions/chat-999/messages", json{{"text", "x"}}.dump(), "application/json")->status == 404);
    const auto empty = c.Post("/api/chat/sessions/" + id + "/messages", json{{"text", ""}}.dump(), "application/json");
    CHECK(empty->status == 400);
    CHECK(body_of(empty)["field"] == "text");
}

TEST_CASE("chat creation validates its input and maps provider failures") {
    Harness h;
    auto c = h.client();
    auto post = [&](const json& body) {
        const auto r = c.Post("/api/chat/sessions", body.dump(), "application/json");
        REQUIRE(r);
        return std::make_pair(r->status, body_of(r));
    };
    CHECK(post({{"mock", true}}).first == 400);
    CHECK(post({{"example_id", "nope"}, {"mock", true}}).first == 404);
    const auto [s1, b1] = post({{"example_id", "wine"}, {"mock", true}, {"word_limit", 0}});
    CHECK(s1 == 400);
    CHECK(b1["field"] == "word_limit");

    ::unsetenv("GP4NLDR_LLM_API_KEY");
    const auto [s2, b2] = post({{"example_id", "wine"}});
    CHECK(s2 == 502);
    CHECK(b2["code"] == "auth_failure");
    const auto [s3, b3] = post({{"example_id", "wine"}, {"model", {{"api_key", kSecret}, {"model_id", "rate-limited"}}}});
    CHECK(s3 == 429);
    CHECK(b3["code"] == "rate_limited");
    CHECK(b3.dump().find(kSecret) == std::string::npos);

    // per-session overrides reach the provider factory
    const auto [s4, b4] = post({{"example_id", "wine"}, {"model", {{"api_key", kSecret}, {"model_id", "gpt-4"}, {"temperature", 0.5}}}});
    CHECK(s4 == 201);
    CHECK(b4["model_id"] == "gpt-4");
    std::lock_guard lock(h.seen_mutex);
    CHECK(h.seen_configs.back().model_id == "gpt-4");
    CHECK(h.seen_configs.back().api_key == kSecret);
    CHECK(h.seen_configs.back().temperature == 0.5);
}

TEST_CASE("a second question while one is pending is refused") {
    Harness h;
    auto c = h.client();
    const std::string id = body_of(c.Post("/api/chat/sessions", json{{"example_id", "wine"}, {"mock", true}}.dump(), "application/json"))["id"];
    h.closed->store(true);
    auto pending = std::async(std::launch::async, [&] {
        auto c2 = h.client();
        return c2.Post("/api/chat/sessions/" + id + "/messages", json{{"text", "first"}}.dump(), "application/json")->status;
    });
    std::this_thread::sleep_for(300ms);
    const auto r = c.Post("/api/chat/sessions/" + id + "/messages", json{{"text", "second"}}.dump(), "application/json");
    REQUIRE(r);
    CHECK(r->status == 409);
    CHECK(body_of(r)["code"] == "busy");
    h.closed->store(false);
    h.release.set_value();
    CHECK(pending.get() == 200);
    const auto history = body_of(c.Get("/api/chat/sessions/" + id + "/export"));
    REQUIRE(history["chat"]["messages"].size() == 4);
    CHECK(history["chat"]["messages"][2]["text"] == "first");
}

TEST_CASE("export and import round-trip a conversation") {
    Harness h;
    auto c = h.client();
    const std::string id = body_of(c.Post("/api/chat/sessions", json{{"example_id", "dermatology"}, {"mock", true}}.dump(), "application/json"))["id"];
    (void)c.Post("/api/chat/sessions/" + id + "/messages", json{{"text", "what does tarpeian do?"}}.dump(), "application/json");
    const auto exported = c.Get("/api/chat/sessions/" + id + "/export");
    REQUIRE(exported);
    CHECK(exported->status == 200);
    CHECK(exported->body.find("api_key") == std::string::npos);

    const auto imported = c.Post("/api/sessions/import?mock=true", exported->body, "application/json");
    REQUIRE(imported);
    CHECK(imported->status == 201);
    const auto session = body_of(imported);
    CHECK(session["messages"].size() == 4);
    const std::string new_id = session["id"];
    CHECK(new_id != id);
    const auto again = c.Get("/api/chat/sessions/" + new_id + "/export");
    CHECK(again->body == exported->body);

    // the imported session keeps going
    const auto more = c.Post("/api/chat/sessions/" + new_id + "/messages", json{{"text", "and nrmse?"}}.dump(), "application/json");
    CHECK(more->status == 200);
    CHECK(body_of(more)["messages"].size() == 6);

    auto j = json::parse(exported->body);
    j["format_version"] = "99";
    const auto wrong = c.Post("/api/sessions/import?mock=true", j.dump(), "application/json");
    CHECK(wrong->status == 400);
    CHECK(body_of(wrong)["code"] == "version_mismatch");
    const auto broken = c.Post("/api/sessions/import?mock=true", exported->body.substr(0, 100), "application/json");
    CHECK(broken->status == 400);
    CHECK(body_of(broken)["code"] == "parse_error");
    CHECK(c.Get("/api/chat/sessions/chat-999/export")->status == 404);
}
