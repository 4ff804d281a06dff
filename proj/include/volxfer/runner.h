#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "volxfer/config.h"
#include "volxfer/harness.h"
#include "volxfer/report.h"
#include "volxfer/synth.h"

namespace volxfer::runner {

struct RunOptions {
    std::filesystem::path config;
    std::optional<std::size_t> threads;
    std::optional<std::uint64_t> seed;
    std::optional<std::filesystem::path> out;
    std::optional<std::string> period;  // run only this sample period label
};

// Config with command-line overrides applied.
config::ExperimentConfig resolve_config(const RunOptions& opts);

struct Dataset {
    std::vector<harness::AssetPanel> targets;
    std::vector<harness::AssetPanel> sources;
    std::uint64_t digest = 0;  // of the daily records and the result-relevant config
};

// Intraday CSVs -> daily records for every configured asset.
Dataset load_dataset(const config::ExperimentConfig& cfg);

harness::HarnessConfig harness_config(const config::ExperimentConfig& cfg);
report::ReportConfig report_config(const config::ExperimentConfig& cfg);
std::vector<harness::ModelSpec> specs_for(const config::ExperimentConfig& cfg, const harness::SamplePeriod& period);
std::vector<harness::SamplePeriod> selected_periods(const config::ExperimentConfig& cfg,
                                                    const std::optional<std::string>& label);

// Subcommands. Each returns the process exit status and writes under the
// output directory: daily/ (ingest), selection/ (select), cache/, fits/,
// models/, selection/ and reports/ (forecast), reports/ (report).
int ingest(const RunOptions& opts);
int select(const RunOptions& opts);
int forecast(const RunOptions& opts);
int report(const RunOptions& opts);
int synth(const std::filesystem::path& out, const synth::PanelSpec& spec);

}  // namespace volxfer::runner
