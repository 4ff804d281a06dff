#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "volxfer/common.h"

namespace volxfer::eval {

// rv_d at the origin (1-based day index into `rv_series`); nullopt when the
// origin is outside the series or its value is not finite.
std::optional<double> naive_forecast(std::span<const double> rv_series, std::size_t origin_day);

struct Losses {
    double mse = 0.0;
    double mae = 0.0;
};

// Throws ValidationError on empty or unequal inputs.
Losses compute_losses(std::span<const double> forecasts, std::span<const double> actuals);

std::vector<double> squared_errors(std::span<const double> forecasts, std::span<const double> actuals);
std::vector<double> absolute_errors(std::span<const double> forecasts, std::span<const double> actuals);

inline constexpr std::size_t kDmMinLength = 10;

struct DmResult {
    double statistic = 0.0;
    double p_value = 0.5;
    bool reject = false;      // at the 5% level
    bool degenerate = false;  // zero variance with a non-zero mean differential
};

// One-sided test of H1: E[loss_a] < E[loss_b]. d = loss_a - loss_b,
// statistic = mean(d) / sqrt(var(d) / n) with the lag-0 (population) variance,
// p = Phi(statistic).
DmResult dm_test(std::span<const double> loss_a, std::span<const double> loss_b);

double standard_normal_cdf(double x);

inline constexpr std::size_t kMcsMinLength = 20;

struct McsConfig {
    double alpha = 0.05;
    std::size_t bootstrap = 5000;
    std::uint64_t seed = 0;
};

struct McsResult {
    std::vector<std::size_t> survivors;   // column indices, ascending
    std::vector<std::size_t> eliminated;  // in elimination order
    std::vector<double> p_values;         // p-value at each elimination step
};

// Row-major n x K loss matrix, losses[t][k].
using LossMatrix = std::vector<std::vector<double>>;

// Model confidence set with the range statistic T_R = max |t_ij| over the
// surviving models. The variances of the pairwise mean differentials and the
// null distribution come from one set of moving-block bootstrap resamples
// (block length floor(n^(1/3))) reused across elimination steps. While the
// p-value is below alpha, the model with the largest max_j t_ij is removed.
McsResult model_confidence_set(const LossMatrix& losses, const McsConfig& cfg);

}  // namespace volxfer::eval
