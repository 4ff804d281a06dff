#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "volxfer/data_pipeline.h"
#include "volxfer/models.h"
#include "volxfer/transfer_select.h"

namespace volxfer::harness {

// Daily records of one asset; records[d - 1] is trading day d.
struct AssetPanel {
    std::string id;
    std::vector<data::DailyRecord> records;
};

// Origins run from train_end to train_end + eval_len - 1; origin o forecasts
// day o + 1. Models are refitted at the first origin and every
// reestimate_every origins after it.
struct SamplePeriod {
    std::string label;
    std::size_t train_end = 0;
    std::size_t eval_len = 0;
    std::size_t reestimate_every = 1;
    bool scarcity = false;

    std::size_t first_origin() const { return train_end; }
    std::size_t last_origin() const { return train_end + eval_len - 1; }
    std::size_t fit_count() const { return (eval_len + reestimate_every - 1) / reestimate_every; }
    // Number of trading days an asset needs for this period.
    std::size_t required_days() const { return last_origin() + 1; }
};

inline constexpr std::size_t kStandardEvalLength = 100;
inline constexpr std::size_t kStandardReestimation = 5;
inline constexpr const char* kAllStandardLabel = "s*";

// s in {50, 150, 250, 350, 450} (any s >= 22 is accepted).
SamplePeriod standard_period(std::size_t s);
// s in {1, 5, 22} with 4, 17 and 28 daily-refitted origins.
SamplePeriod scarcity_period(std::size_t s);

inline constexpr const char* kNaiveModelId = "NF";

struct ModelSpec {
    transfer::Approach approach = transfer::Approach::TargetOnly;
    double epsilon = 0.0;  // MTL only
    models::Family family = models::Family::Har;
    data::PredictorKind kind = data::PredictorKind::Std;

    // "TO HAR-STD", "NP FNN-EXT-5", "MTL-50 XGB-STD-1"
    std::string id() const;
    static ModelSpec parse(std::string_view id);
};

// Every approach x epsilon x family x predictor combination that runs in the
// period: full predictor sets for standard periods; for a scarcity period s
// the reduced sets with horizon <= s ("-1" from day 1, "-5" from day 5, the
// full set from day 22).
std::vector<ModelSpec> expand_specs(std::span<const transfer::Approach> approaches,
                                    std::span<const double> epsilons,
                                    std::span<const models::Family> families,
                                    std::span<const data::PredictorKind> base_kinds,
                                    const SamplePeriod& period);

struct ForecastRecord {
    std::string period;
    std::string asset;
    std::string model;
    std::size_t origin_day = 0;
    Date origin_date;
    double forecast = 0.0;    // clamped prediction; NaN when failed
    double prediction = 0.0;  // raw model output; NaN when failed
    double actual = 0.0;      // rv_d of origin_day + 1
    bool clamped = false;
    bool failed = false;
    std::size_t fit_day = 0;      // origin of the fit that produced it
    std::size_t train_rows = 0;
};

struct FitSummary {
    std::string period;
    std::string asset;
    std::string model;
    std::size_t origin_day = 0;
    std::size_t rows = 0;
    std::size_t epochs = 0;  // FNN only
    bool failed = false;
    std::string message;
};

struct TrainingObservation {
    const std::string& asset;
    const std::string& model;
    std::size_t origin_day;
    Date origin_date;
    const data::SupervisedDataSet& data;
};

struct HarnessConfig {
    std::uint64_t seed = 0;
    std::size_t threads = 1;
    std::size_t subsequence_length = 22;
    models::FitConfig fit;  // batch size and seed are set per fit
    std::size_t batch_target_only = 4;
    std::size_t batch_target_only_scarcity = 1;
    std::size_t batch_pooled = 1024;
    std::size_t batch_multi_source = 512;
    bool collect_audit = false;
    bool collect_snapshots = false;
    // Sees every training set right before fitting; called concurrently when
    // threads > 1.
    std::function<void(const TrainingObservation&)> observer;
};

struct SelectionAudit {
    std::string asset;
    data::PredictorKind kind = data::PredictorKind::Std;
    double epsilon = 0.0;
    std::vector<transfer::AuditRow> rows;
};

struct Snapshot {
    std::string period;
    std::string asset;
    std::string model;
    std::size_t origin_day = 0;
    nlohmann::json model_json;
};

struct PeriodResult {
    SamplePeriod period;
    std::vector<ForecastRecord> records;  // sorted by (asset, model, origin)
    std::vector<FitSummary> fits;         // sorted by (asset, model, origin)
    std::vector<SelectionAudit> audits;
    std::vector<Snapshot> snapshots;      // last successful fit per (asset, model)
    std::vector<std::string> skipped_assets;  // too short for the period
};

// Walk-forward evaluation of every model spec (plus the naive forecast) on every
// target asset that is long enough for the period. At each re-estimation
// origin the training data holds target rows labeled on or before the origin
// date and source rows trimmed to the same date. FNN fits after the first
// successful one of a (target, spec) pair reuse its epoch count. A failed fit
// flags the records it would have produced.
PeriodResult rolling_evaluate(std::span<const AssetPanel> targets, std::span<const AssetPanel> sources,
                              std::span<const ModelSpec> specs, const SamplePeriod& period,
                              const HarnessConfig& cfg);

// The MTL selection audit of rolling_evaluate without fitting anything.
std::vector<SelectionAudit> selection_audit(std::span<const AssetPanel> targets,
                                            std::span<const AssetPanel> sources,
                                            std::span<const data::PredictorKind> kinds,
                                            std::span<const double> epsilons,
                                            const SamplePeriod& period, const HarnessConfig& cfg);

enum class Strategy { OneOneOne, OneFiveFive, OneFiveTwentyTwo };

Strategy parse_strategy(std::string_view name);  // "1-1-1", "1-5-5", "1-5-22"
std::string_view to_string(Strategy s);

// Predictor horizon (1, 5 or 22) a strategy uses to forecast trading day `day`.
int transition_horizon(Strategy s, std::size_t day);

// Strategy records assembled from scarcity-period records: for each forecast
// day the record of the model whose predictor horizon the strategy prescribes.
// Model ids become "<strategy> <approach> <family>-<STD|EXT>". Only NP and MTL
// models are composed.
std::vector<ForecastRecord> compose_strategy(Strategy s, std::span<const ForecastRecord> scarcity_records);

}  // namespace volxfer::harness
