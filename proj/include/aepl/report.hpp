#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

#include "aepl/engine.hpp"

namespace aepl {

enum class ReportFormat { Csv, Json };

ReportFormat parse_report_format(std::string_view s);

/// Per-run rows. CSV columns, in order: method, guidance, kschedule, metric, seed, round,
/// accuracy, consumed, cum_budget_ratio, pseudo_count, pseudo_correct, ari, label_correct.
/// JSON is an array of objects with the same keys. UTF-8, LF endings, no timestamps.
std::string format_report(const ReportTable& table, ReportFormat format);
void emit_report(const ReportTable& table, const std::filesystem::path& path, ReportFormat format);
void emit_report(const ReportTable& table, const std::filesystem::path& path, std::string_view format);

/// Parses what `format_report` produced back into rows (wall time is not stored).
std::vector<ReportRow> parse_report(std::string_view text, ReportFormat format);

/// Mean/std table, one line per (config, round).
std::string format_summary_csv(const ReportTable& table);

nlohmann::json to_json(const ExperimentConfig& cfg);
/// Missing keys keep their defaults; unknown keys are rejected.
ExperimentConfig experiment_config_from_json(const nlohmann::json& j);

/// Expands list-valued method/guidance/kschedule/metric keys into the cross product; every
/// other key is a scalar shared by all cells. Returns the configs and the shared seed list.
std::pair<std::vector<ExperimentConfig>, std::vector<std::uint64_t>> expand_matrix(const nlohmann::json& j);

nlohmann::json to_json(const RoundSnapshot& s);

}  // namespace aepl
