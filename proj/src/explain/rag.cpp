#include "gp4nldr/explain/rag.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <fmt/format.h>

namespace gp4nldr::explain {

namespace {

char lower(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }

std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), lower);
    return out;
}

bool token_byte(unsigned char c) { return std::isalnum(c) || c >= 0x80; }

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

} // namespace

std::vector<std::string> default_keywords() {
    return {"gp-mal", "gpmal", "gpmal2", "gp-mal2", "gp-mal-2", "tarp", "lexi", "tourn", "umap", "nrmse"};
}

std::vector<std::string> detect_keywords(std::string_view question, const std::vector<std::string>& keywords) {
    const auto haystack = to_lower(question);
    std::vector<std::string> matched;
    for (const auto& k : keywords) {
        if (!k.empty() && haystack.find(to_lower(k)) != std::string::npos) matched.push_back(k);
    }
    return matched;
}

std::string normalize_whitespace(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) out.push_back(' ');
        pending_space = false;
        out.push_back(c);
    }
    return out;
}

std::vector<Chunk> chunk_documents(const std::vector<Document>& docs, std::size_t chunk_chars, std::size_t overlap_chars) {
    if (chunk_chars <= overlap_chars) throw std::invalid_argument("chunk size must exceed the overlap");
    const std::size_t step = chunk_chars - overlap_chars;
    std::vector<Chunk> chunks;
    for (const auto& doc : docs) {
        const auto text = normalize_whitespace(doc.text);
        for (std::size_t start = 0; start < text.size(); start += step)
            chunks.push_back({doc.id, text.substr(start, chunk_chars), start});
    }
    return chunks;
}

std::vector<double> vectorize(std::string_view text) {
    std::vector<double> v(kVectorDimension, 0.0);
    std::string token;
    auto flush = [&] {
        if (!token.empty()) v[fnv1a(token) % kVectorDimension] += 1.0;
        token.clear();
    };
    for (char c : text) {
        if (token_byte(static_cast<unsigned char>(c))) {
            token.push_back(lower(c));
        } else {
            flush();
        }
    }
    flush();
    const double norm = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
    if (norm > 0.0) {
        for (double& x : v) x /= norm;
    }
    return v;
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) noexcept {
    double dot = 0.0;
    double na = 0.0;
    double nb = 0.0;
    for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

VectorStore::VectorStore(std::vector<Chunk> chunks) {
    entries_.reserve(chunks.size());
    for (auto& c : chunks) {
        auto vec = vectorize(c.text);
        entries_.push_back({std::move(c), std::move(vec)});
    }
}

nlohmann::json VectorStore::to_json() const {
    nlohmann::json chunks = nlohmann::json::array();
    for (const auto& e : entries_) {
        std::vector<std::size_t> indices;
        std::vector<double> values;
        for (std::size_t i = 0; i < e.vector.size(); ++i) {
            if (e.vector[i] != 0.0) {
                indices.push_back(i);
                values.push_back(e.vector[i]);
            }
        }
        chunks.push_back({{"doc_id", e.chunk.doc_id},
                          {"offset", e.chunk.offset},
                          {"text", e.chunk.text},
                          {"indices", indices},
                          {"values", values}});
    }
    return {{"dimension", kVectorDimension}, {"vectorizer", "hashed-tf-fnv1a"}, {"chunks", chunks}};
}

VectorStore VectorStore::from_json(const nlohmann::json& j) {
    if (j.at("dimension").get<std::size_t>() != kVectorDimension)
        throw std::runtime_error("vector store dimension does not match this build");
    VectorStore store;
    for (const auto& c : j.at("chunks")) {
        StoreEntry e;
        e.chunk = {c.at("doc_id").get<std::string>(), c.at("text").get<std::string>(), c.at("offset").get<std::size_t>()};
        e.vector.assign(kVectorDimension, 0.0);
        const auto indices = c.at("indices").get<std::vector<std::size_t>>();
        const auto values = c.at("values").get<std::vector<double>>();
        if (indices.size() != values.size()) throw std::runtime_error("vector store entry has mismatched arrays");
        for (std::size_t i = 0; i < indices.size(); ++i) e.vector.at(indices[i]) = values[i];
        store.entries_.push_back(std::move(e));
    }
    return store;
}

void VectorStore::save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error(fmt::format("cannot write '{}'", path.string()));
    out << to_json().dump() << '\n';
}

VectorStore VectorStore::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(fmt::format("cannot read '{}'", path.string()));
    return from_json(nlohmann::json::parse(in));
}

bool VectorStore::operator==(const VectorStore& other) const {
    if (entries_.size() != other.entries_.size()) return false;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        if (entries_[i].chunk != other.entries_[i].chunk || entries_[i].vector != other.entries_[i].vector) return false;
    }
    return true;
}

std::vector<std::string> query_store(const VectorStore& store, std::string_view question, std::size_t top_k) {
    if (store.empty() || top_k == 0) return {};
    const auto q = vectorize(question);
    const auto& entries = store.entries();
    std::vector<std::pair<double, std::size_t>> scored;
    scored.reserve(entries.size());
    for (std::size_t i = 0; i < entries.size(); ++i) scored.emplace_back(cosine(q, entries[i].vector), i);
    std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    std::vector<std::string> out;
    for (std::size_t i = 0; i < scored.size() && i < top_k; ++i) out.push_back(entries[scored[i].second].chunk.text);
    return out;
}

std::vector<Document> load_documents(const std::filesystem::path& directory) {
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(directory)) {
        const auto ext = entry.path().extension();
        if (entry.is_regular_file() && (ext == ".txt" || ext == ".md")) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    std::vector<Document> docs;
    for (const auto& f : files) {
        std::ifstream in(f, std::ios::binary);
        docs.push_back({f.filename().string(), std::string(std::istreambuf_iterator<char>(in), {})});
    }
    return docs;
}

RagConfig load_rag_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(fmt::format("cannot read '{}'", path.string()));
    const auto j = nlohmann::json::parse(in);
    RagConfig c;
    c.keywords = j.value("keywords", c.keywords);
    c.chunk_chars = j.value("chunk_chars", c.chunk_chars);
    c.overlap_chars = j.value("overlap_chars", c.overlap_chars);
    c.top_k = j.value("top_k", c.top_k);
    return c;
}

VectorStore build_store(const std::vector<Document>& docs, const RagConfig& config) {
    return VectorStore(chunk_documents(docs, config.chunk_chars, config.overlap_chars));
}

} // namespace gp4nldr::explain
