#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "volxfer/harness.h"

namespace volxfer::report {

inline constexpr const char* kForecastHeader = "asset,model,origin,forecast,actual";
inline constexpr const char* kRecordHeader =
    "period,asset,model,origin_day,origin_date,forecast,prediction,actual,clamped,failed,fit_day,train_rows";
inline constexpr const char* kFitHeader = "period,asset,model,origin_day,rows,epochs,failed,message";

// Full ForecastRecord dump used as the resumable cache; failed values are
// empty cells.
std::string records_csv(std::span<const harness::ForecastRecord> records);
std::vector<harness::ForecastRecord> parse_records_csv(const std::string& text, const std::string& origin_name);
std::vector<harness::ForecastRecord> read_records_csv(const std::filesystem::path& path);

// Plot-ready successful forecasts sorted by (asset, model, origin date).
std::string forecasts_csv(std::span<const harness::ForecastRecord> records);
std::string fits_csv(std::span<const harness::FitSummary> fits);
std::string audit_csv(const harness::SelectionAudit& audit);

struct MetricRow {
    std::string period;
    std::string asset;
    std::string model;
    std::size_t n = 0;         // successful forecasts
    std::size_t failures = 0;  // flagged and excluded
    double mse = 0.0;
    double mae = 0.0;
};

// One row per (period, asset, model) with at least one successful record.
std::vector<MetricRow> compute_metrics(std::span<const harness::ForecastRecord> records);

struct ReportConfig {
    std::vector<std::string> standard_periods;
    std::vector<std::string> scarcity_periods;
    std::vector<harness::Strategy> strategies;
    double mcs_alpha = 0.05;
    std::size_t mcs_bootstrap = 5000;
    std::uint64_t seed = 0;
};

// Evaluation groups built from the records: each standard period, their union
// "s*", each scarcity period and each transition strategy (with the naive
// forecasts of the scarcity periods as reference).
std::map<std::string, std::vector<harness::ForecastRecord>> evaluation_groups(
    std::span<const harness::ForecastRecord> records, const ReportConfig& cfg);

// file name -> content of every aggregate report: metrics.csv,
// relative_mse.csv, relative_mae.csv, nf_relative.csv, mcs.csv,
// mcs_counts.csv, transition.csv and forecasts.csv.
std::map<std::string, std::string> build_reports(std::span<const harness::ForecastRecord> records,
                                                 const ReportConfig& cfg);

// Short human-readable summary: the best models relative to NF per group.
std::string summary_table(std::span<const harness::ForecastRecord> records, const ReportConfig& cfg);

}  // namespace volxfer::report
