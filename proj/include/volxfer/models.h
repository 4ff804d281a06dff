#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string_view>

#include <nlohmann/json.hpp>

#include "volxfer/data_pipeline.h"

namespace volxfer::models {

enum class Family { Har, Fnn, Boosted };

std::string_view to_string(Family f);  // "HAR", "FNN", "XGB"
Family parse_family(std::string_view name);

struct AdamConfig {
    double learning_rate = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct BoostConfig {
    std::size_t rounds = 40;
    std::size_t max_depth = 5;
    double shrinkage = 0.1;
    double gamma = 0.1;   // per-leaf penalty
    double lambda = 1.0;  // L2 on leaf weights
    double alpha = 0.0;   // L1 on leaf weights; only 0 is supported
    double subsample = 0.75;
    std::size_t min_instances_per_leaf = 1;
    std::optional<double> base_score;  // defaults to the mean training label
};

struct FitConfig {
    std::size_t batch_size = 1024;
    std::size_t max_epochs = 500;
    std::size_t patience = 100;
    double validation_fraction = 0.10;
    // Below this many rows the FNN trains without a validation split for
    // max_epochs epochs.
    std::size_t min_rows_for_validation = 10;
    // Train exactly this many epochs with early stopping off (re-estimation
    // points after the first one of a sample period).
    std::optional<std::size_t> fixed_epochs;
    std::uint64_t seed = 0;
    AdamConfig adam;
    BoostConfig boost;

    void validate() const;
};

// Common prediction surface of the fitted regressors. Implementations are
// immutable after fitting and safe to share across threads.
class Regressor {
public:
    virtual ~Regressor() = default;

    virtual Family family() const = 0;
    virtual std::size_t width() const = 0;
    // Throws ValidationError when x.size() != width().
    virtual double predict(std::span<const double> x) const = 0;
    virtual nlohmann::json to_json() const = 0;
};

using RegressorPtr = std::shared_ptr<const Regressor>;

RegressorPtr fit(Family family, const data::SupervisedDataSet& data, const FitConfig& cfg);

// Rebuilds a regressor from its snapshot.
RegressorPtr from_json(const nlohmann::json& snapshot);

// Negative predictions are replaced by the smallest realized variance of the
// target training data.
double clamp_forecast(double prediction, double training_min_rv);

void check_width(std::span<const double> x, std::size_t expected);

}  // namespace volxfer::models
