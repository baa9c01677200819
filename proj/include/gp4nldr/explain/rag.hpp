#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace gp4nldr::explain {

/// Question fragments that switch on retrieval.
[[nodiscard]] std::vector<std::string> default_keywords();

/// Keyword fragments found in the question (case-insensitive substring match), in list order.
[[nodiscard]] std::vector<std::string> detect_keywords(std::string_view question, const std::vector<std::string>& keywords);

struct Document {
    std::string id;
    std::string text;
};

struct Chunk {
    std::string doc_id;
    std::string text;
    /// Byte offset of the chunk in the whitespace-normalized document.
    std::size_t offset = 0;

    bool operator==(const Chunk&) const = default;
};

/// Collapses whitespace runs to one space and trims both ends.
[[nodiscard]] std::string normalize_whitespace(std::string_view text);

/// Sliding byte window over each normalized document: windows start every
/// (chunk_chars - overlap_chars) bytes while the start is inside the text; the last window may be short.
[[nodiscard]] std::vector<Chunk> chunk_documents(const std::vector<Document>& docs, std::size_t chunk_chars,
                                                 std::size_t overlap_chars);

inline constexpr std::size_t kVectorDimension = 4096;

/// Hashed term-frequency vector: lowercase alphanumeric tokens (bytes >= 0x80 count as
/// alphanumeric), FNV-1a bucketed into kVectorDimension slots, L2-normalized. Empty text gives zeros.
[[nodiscard]] std::vector<double> vectorize(std::string_view text);

/// Cosine similarity; 0 when either vector is zero.
[[nodiscard]] double cosine(const std::vector<double>& a, const std::vector<double>& b) noexcept;

struct StoreEntry {
    Chunk chunk;
    std::vector<double> vector;
};

/// Flat (exact) similarity index over chunk vectors. Immutable once built.
class VectorStore {
public:
    VectorStore() = default;
    explicit VectorStore(std::vector<Chunk> chunks);

    [[nodiscard]] std::size_t size() const noexcept { return entries_.size(); }
    [[nodiscard]] bool empty() const noexcept { return entries_.empty(); }
    [[nodiscard]] const std::vector<StoreEntry>& entries() const noexcept { return entries_; }

    /// Vectors are stored sparsely as parallel index/value arrays.
    [[nodiscard]] nlohmann::json to_json() const;
    [[nodiscard]] static VectorStore from_json(const nlohmann::json& j);
    void save(const std::filesystem::path& path) const;
    [[nodiscard]] static VectorStore load(const std::filesystem::path& path);

    bool operator==(const VectorStore& other) const;

private:
    std::vector<StoreEntry> entries_;
};

/// Chunk texts ranked by cosine similarity to the question, ties in insertion order, at most top_k.
[[nodiscard]] std::vector<std::string> query_store(const VectorStore& store, std::string_view question, std::size_t top_k = 3);

/// `.txt` and `.md` files of a directory, sorted by file name; the id is the file name.
[[nodiscard]] std::vector<Document> load_documents(const std::filesystem::path& directory);

struct RagConfig {
    std::vector<std::string> keywords = default_keywords();
    std::size_t chunk_chars = 1200;
    std::size_t overlap_chars = 200;
    std::size_t top_k = 3;
};

/// Missing keys keep their defaults.
[[nodiscard]] RagConfig load_rag_config(const std::filesystem::path& path);

[[nodiscard]] VectorStore build_store(const std::vector<Document>& docs, const RagConfig& config);

} // namespace gp4nldr::explain
