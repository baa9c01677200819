#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include <json.hpp>

#include "gp4nldr/explain/session.hpp"
#include "gp4nldr/gp/engine.hpp"

namespace gp4nldr::service {

inline constexpr std::string_view kArchiveFormatVersion = "1";

class ArchiveError : public std::runtime_error {
public:
    enum class Kind { version_mismatch, parse_error };
    ArchiveError(Kind kind, const std::string& message) : std::runtime_error(message), kind_(kind) {}
    [[nodiscard]] Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

/// Downloadable snapshot of a run and (optionally) its conversation. Holds dataset metadata only,
/// never row values, and never an API key.
struct SessionArchive {
    gp::RunResult result;
    std::optional<explain::ChatSession> chat;
};

[[nodiscard]] nlohmann::json run_config_to_json(const gp::RunConfig& config);
/// Unspecified fields keep RunConfig defaults. Throws gp::ConfigError naming the offending field.
[[nodiscard]] gp::RunConfig run_config_from_json(const nlohmann::json& j);

[[nodiscard]] nlohmann::json archive_to_json(const SessionArchive& archive);
[[nodiscard]] SessionArchive archive_from_json(const nlohmann::json& j);

/// Pretty-printed JSON document.
[[nodiscard]] std::string export_archive(const SessionArchive& archive);
[[nodiscard]] SessionArchive import_archive(std::string_view bytes);

[[nodiscard]] SessionArchive load_archive_file(const std::string& path);
void save_archive_file(const std::string& path, const SessionArchive& archive);

} // namespace gp4nldr::service
