#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "volxfer/harness.h"

namespace volxfer::synth {

// Daily realized variance following a HAR recursion:
//   mean_{t+1} = c + beta_d rv_t + beta_w rv_w,t + beta_m rv_m,t,
// with c chosen so the unconditional mean is `level`. Additive noise gives
// rv_{t+1} = mean + noise * e; multiplicative noise gives
// rv_{t+1} = mean * exp(noise * e - noise^2 / 2), which keeps the series
// positive with the same conditional mean.
struct HarDynamics {
    double level = 1e-4;
    double beta_d = 0.35;
    double beta_w = 0.35;
    double beta_m = 0.2;
    double noise = 0.5;
    bool multiplicative = true;
};

// `days` values after a burn-in of 200 draws started at the level.
std::vector<double> simulate_rv(const HarDynamics& dynamics, std::size_t days, std::mt19937_64& engine);

// Weekdays starting at the first weekday on or after `start`.
std::vector<Date> business_days(Date start, std::size_t count);

// An asset panel built straight from a daily variance path: closes follow a
// random walk with the given variances, volumes are log-normal, macro series
// and earnings are absent (only STD-type predictors are available).
harness::AssetPanel daily_panel(const std::string& id, std::span<const double> rv, std::span<const Date> dates,
                                std::mt19937_64& engine);

struct PanelSpec {
    std::size_t sources = 5;
    std::size_t targets = 2;
    std::size_t days = 800;         // source history length
    std::size_t target_days = 0;    // 0 picks min(days, 600)
    std::uint64_t seed = 0;
    bool quick = false;             // lighter model settings in the written config
};

// Writes intraday CSVs for every asset, the five macro series, an earnings
// calendar and a matching config.toml into `dir`. Sources alternate between
// two volatility regimes; targets share the dynamics of the first one and list
// so that their last day is the sources' last day.
void write_fixture(const std::filesystem::path& dir, const PanelSpec& spec);

}  // namespace volxfer::synth
