#pragma once

#include <iosfwd>
#include <string>
#include <string_view>

#include <json.hpp>

#include "qkd/analysis.hpp"
#include "qkd/protocol/session.hpp"

namespace qkd {

enum class ReportFormat { json, csv };

/// Accepts "json" or "csv".
ReportFormat parse_format(std::string_view text);
std::string_view extension(ReportFormat format);

nlohmann::ordered_json to_json(const protocol::SessionReport& report);
nlohmann::ordered_json to_json(const PredictedMetrics& metrics);
nlohmann::ordered_json to_json(const DeviationReport& deviation);

/// Inverse of to_json; throws std::runtime_error naming a missing or mistyped field.
protocol::SessionReport session_report_from_json(const nlohmann::json& j);
PredictedMetrics predicted_metrics_from_json(const nlohmann::json& j);
DeviationReport deviation_report_from_json(const nlohmann::json& j);

/// Two-column CSV (`field,value`), one row per leaf; fields are JSON pointers
/// and values JSON scalars, so the document re-parses without loss.
std::string to_csv(const nlohmann::ordered_json& document);
nlohmann::json from_csv(std::string_view csv);

/// Serialises in the requested format, ending with a newline.
std::string render(const nlohmann::ordered_json& document, ReportFormat format);
nlohmann::json parse_rendered(std::string_view text, ReportFormat format);

}  // namespace qkd
