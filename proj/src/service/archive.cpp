#include "gp4nldr/service/archive.hpp"

#include <fstream>

#include <fmt/format.h>

#include "gp4nldr/gp/expression.hpp"

namespace gp4nldr::service {

using nlohmann::json;

namespace {

json bloat_to_json(const gp::BloatControl& bloat) {
    json j{{"method", gp::bloat_name(bloat)}};
    if (const auto* d = std::get_if<gp::DoubleTournament>(&bloat)) {
        j["fitness_first"] = d->fitness_first;
        j["p_smaller"] = d->p_smaller;
    } else if (const auto* t = std::get_if<gp::Tarpeian>(&bloat)) {
        j["p"] = t->p;
    }
    return j;
}

gp::BloatControl bloat_from_json(const json& j) {
    const auto method = j.is_string() ? j.get<std::string>() : j.value("method", std::string("lexicographic"));
    if (method == "none") return gp::NoBloatControl{};
    if (method == "lexicographic") return gp::Lexicographic{};
    if (method == "double" || method == "double_tournament") {
        gp::DoubleTournament d;
        if (j.is_object()) {
            d.fitness_first = j.value("fitness_first", d.fitness_first);
            d.p_smaller = j.value("p_smaller", d.p_smaller);
        }
        return d;
    }
    if (method == "tarpeian") {
        gp::Tarpeian t;
        if (j.is_object()) t.p = j.value("p", t.p);
        return t;
    }
    throw gp::ConfigError({"bloat", fmt::format("unknown bloat control '{}'", method)});
}

template <typename T>
void read_field(const json& j, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception&) {
        throw gp::ConfigError({key, "has the wrong type"});
    }
}

// Unsigned fields reject negative JSON numbers instead of wrapping.
void read_count(const json& j, const char* key, std::size_t& out) {
    if (!j.contains(key)) return;
    const auto& v = j.at(key);
    if (!v.is_number_integer()) throw gp::ConfigError({key, "must be an integer"});
    if (v.get<long long>() < 0) throw gp::ConfigError({key, "must not be negative"});
    out = v.get<std::size_t>();
}

std::string role_name(explain::Role r) { return std::string(explain::to_string(r)); }

} // namespace

json run_config_to_json(const gp::RunConfig& c) {
    return {{"population_size", c.population_size},
            {"generations", c.generations},
            {"final_dimensions", c.final_dimensions},
            {"fitness", std::string(fitness::to_string(c.fitness_id))},
            {"bloat", bloat_to_json(c.bloat)},
            {"seed", c.seed},
            {"max_depth", c.max_depth},
            {"init_min_depth", c.init_min_depth},
            {"init_max_depth", c.init_max_depth},
            {"tournament_size", c.tournament_size},
            {"crossover_rate", c.crossover_rate},
            {"mutation_rate", c.mutation_rate},
            {"elitism_count", c.elitism_count}};
}

gp::RunConfig run_config_from_json(const json& j) {
    if (!j.is_object()) throw gp::ConfigError({"config", "must be an object"});
    gp::RunConfig c;
    read_count(j, "population_size", c.population_size);
    read_count(j, "generations", c.generations);
    read_count(j, "final_dimensions", c.final_dimensions);
    read_count(j, "max_depth", c.max_depth);
    read_count(j, "init_min_depth", c.init_min_depth);
    read_count(j, "init_max_depth", c.init_max_depth);
    read_count(j, "tournament_size", c.tournament_size);
    read_count(j, "elitism_count", c.elitism_count);
    read_field(j, "crossover_rate", c.crossover_rate);
    read_field(j, "mutation_rate", c.mutation_rate);
    read_field(j, "seed", c.seed);
    if (j.contains("fitness")) {
        const auto id = j.at("fitness").is_string() ? fitness::parse_fitness_id(j.at("fitness").get<std::string>()) : std::nullopt;
        if (!id) throw gp::ConfigError({"fitness", "must be one of gpmal, gpmal2, nrmse"});
        c.fitness_id = *id;
    }
    if (j.contains("bloat")) c.bloat = bloat_from_json(j.at("bloat"));
    return c;
}

json archive_to_json(const SessionArchive& a) {
    const auto& r = a.result;
    json embedding = json::array();
    for (std::size_t i = 0; i < r.embedding.rows(); ++i) {
        const auto row = r.embedding.row(i);
        embedding.push_back(std::vector<double>(row.begin(), row.end()));
    }
    json j{{"format_version", std::string(kArchiveFormatVersion)},
           {"config", run_config_to_json(r.config)},
           {"dataset",
            {{"name", r.dataset.name},
             {"instance_count", r.dataset.instance_count},
             {"feature_names", r.dataset.feature_names},
             {"label_names", r.dataset.label_names}}},
           {"expressions", r.expressions},
           {"best_fitness", r.best_individual.fitness},
           {"fitness_history", r.fitness_history},
           {"accuracy", {{"original", r.accuracy_original}, {"embedding", r.accuracy_embedding}}},
           {"embedding", embedding}};
    if (a.chat) {
        json messages = json::array();
        for (const auto& m : a.chat->messages)
            messages.push_back({{"role", role_name(m.role)}, {"text", m.text}, {"timestamp_ms", m.timestamp_ms}});
        j["chat"] = {{"run_ref", a.chat->run_ref},
                     {"model_id", a.chat->model_id},
                     {"word_limit", a.chat->word_limit},
                     {"keywords", a.chat->keywords},
                     {"messages", messages}};
    }
    return j;
}

SessionArchive archive_from_json(const json& j) {
    if (!j.is_object() || !j.contains("format_version")) throw ArchiveError(ArchiveError::Kind::parse_error, "not a session archive");
    const auto& version = j.at("format_version");
    if (!version.is_string() || version.get<std::string>() != kArchiveFormatVersion)
        throw ArchiveError(ArchiveError::Kind::version_mismatch,
                           fmt::format("unsupported archive format_version {} (expected \"{}\")", version.dump(), kArchiveFormatVersion));
    try {
        SessionArchive a;
        auto& r = a.result;
        r.config = run_config_from_json(j.at("config"));
        const auto& d = j.at("dataset");
        r.dataset.name = d.at("name").get<std::string>();
        r.dataset.instance_count = d.at("instance_count").get<std::size_t>();
        r.dataset.feature_names = d.at("feature_names").get<std::vector<std::string>>();
        r.dataset.label_names = d.at("label_names").get<std::vector<std::string>>();
        r.expressions = j.at("expressions").get<std::vector<std::string>>();
        for (const auto& e : r.expressions) r.best_individual.trees.push_back(gp::parse_expression(e, r.dataset.feature_names));
        const auto& best = j.at("best_fitness");
        r.best_individual.fitness = best.is_null() ? gp::kWorstFitness : best.get<double>();
        r.fitness_history = j.at("fitness_history").get<std::vector<double>>();
        const auto& acc = j.at("accuracy");
        auto number_or_nan = [](const json& v) { return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>(); };
        r.accuracy_original = number_or_nan(acc.at("original"));
        r.accuracy_embedding = number_or_nan(acc.at("embedding"));
        r.embedding = Matrix::from_rows(j.at("embedding").get<std::vector<std::vector<double>>>());
        if (j.contains("chat")) {
            const auto& c = j.at("chat");
            explain::ChatSession s;
            s.run_ref = c.at("run_ref").get<std::string>();
            s.model_id = c.at("model_id").get<std::string>();
            s.word_limit = c.at("word_limit").get<std::size_t>();
            s.keywords = c.at("keywords").get<std::vector<std::string>>();
            for (const auto& m : c.at("messages")) {
                const auto role = m.at("role").get<std::string>();
                if (role != "human" && role != "ai") throw ArchiveError(ArchiveError::Kind::parse_error, "unknown message role");
                s.messages.push_back({role == "human" ? explain::Role::human : explain::Role::ai, m.at("text").get<std::string>(),
                                      m.at("timestamp_ms").get<std::int64_t>()});
            }
            a.chat = std::move(s);
        }
        return a;
    } catch (const ArchiveError&) {
        throw;
    } catch (const std::exception& e) {
        throw ArchiveError(ArchiveError::Kind::parse_error, fmt::format("corrupted archive: {}", e.what()));
    }
}

std::string export_archive(const SessionArchive& archive) { return archive_to_json(archive).dump(2) + "\n"; }

SessionArchive import_archive(std::string_view bytes) {
    const auto j = json::parse(bytes, nullptr, false);
    if (j.is_discarded()) throw ArchiveError(ArchiveError::Kind::parse_error, "archive is not valid JSON");
    return archive_from_json(j);
}

SessionArchive load_archive_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ArchiveError(ArchiveError::Kind::parse_error, fmt::format("cannot read '{}'", path));
    return import_archive(std::string(std::istreambuf_iterator<char>(in), {}));
}

void save_archive_file(const std::string& path, const SessionArchive& archive) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error(fmt::format("cannot write '{}'", path));
    out << export_archive(archive);
}

} // namespace gp4nldr::service
