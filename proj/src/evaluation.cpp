#include "volxfer/evaluation.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "volxfer/rng.h"

namespace volxfer::eval {

std::optional<double> naive_forecast(std::span<const double> rv_series, std::size_t origin_day) {
    if (origin_day == 0 || origin_day > rv_series.size()) return std::nullopt;
    const double v = rv_series[origin_day - 1];
    if (!std::isfinite(v)) return std::nullopt;
    return v;
}

namespace {

void check_pair(std::span<const double> a, std::span<const double> b, const char* what) {
    if (a.size() != b.size()) throw ValidationError(std::string(what) + ": series lengths differ");
    if (a.empty()) throw ValidationError(std::string(what) + ": empty series");
}

}  // namespace

std::vector<double> squared_errors(std::span<const double> forecasts, std::span<const double> actuals) {
    check_pair(forecasts, actuals, "squared_errors");
    std::vector<double> out(forecasts.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double e = forecasts[i] - actuals[i];
        out[i] = e * e;
    }
    return out;
}

std::vector<double> absolute_errors(std::span<const double> forecasts, std::span<const double> actuals) {
    check_pair(forecasts, actuals, "absolute_errors");
    std::vector<double> out(forecasts.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::abs(forecasts[i] - actuals[i]);
    return out;
}

Losses compute_losses(std::span<const double> forecasts, std::span<const double> actuals) {
    check_pair(forecasts, actuals, "compute_losses");
    const auto n = static_cast<double>(forecasts.size());
    double se = 0.0;
    double ae = 0.0;
    for (std::size_t i = 0; i < forecasts.size(); ++i) {
        const double e = forecasts[i] - actuals[i];
        se += e * e;
        ae += std::abs(e);
    }
    return {se / n, ae / n};
}

double standard_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

DmResult dm_test(std::span<const double> loss_a, std::span<const double> loss_b) {
    check_pair(loss_a, loss_b, "dm_test");
    if (loss_a.size() < kDmMinLength) {
        throw ValidationError("dm_test: needs at least " + std::to_string(kDmMinLength) + " observations");
    }
    const std::size_t n = loss_a.size();
    std::vector<double> d(n);
    for (std::size_t t = 0; t < n; ++t) d[t] = loss_a[t] - loss_b[t];
    const double mean = std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(n);
    double var = 0.0;
    for (double v : d) var += (v - mean) * (v - mean);
    var /= static_cast<double>(n);

    DmResult r;
    if (!(var > 0.0)) {
        if (mean == 0.0) return r;
        r.degenerate = true;
        r.statistic = mean < 0.0 ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity();
        r.p_value = mean < 0.0 ? 0.0 : 1.0;
        r.reject = mean < 0.0;
        return r;
    }
    r.statistic = mean / std::sqrt(var / static_cast<double>(n));
    r.p_value = standard_normal_cdf(r.statistic);
    r.reject = r.p_value < 0.05;
    return r;
}

McsResult model_confidence_set(const LossMatrix& losses, const McsConfig& cfg) {
    const std::size_t n = losses.size();
    if (n < kMcsMinLength) throw ValidationError("MCS: needs at least " + std::to_string(kMcsMinLength) + " observations");
    const std::size_t k = losses.front().size();
    if (k < 2) throw ValidationError("MCS: needs at least two models");
    for (const auto& row : losses) {
        if (row.size() != k) throw ValidationError("MCS: ragged loss matrix");
    }
    if (cfg.bootstrap == 0) throw ValidationError("MCS: bootstrap count must be positive");
    if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw ValidationError("MCS: alpha must lie in (0, 1)");

    // Sample means and block-bootstrap means of every model's loss.
    std::vector<double> mean(k, 0.0);
    for (const auto& row : losses) {
        for (std::size_t i = 0; i < k; ++i) mean[i] += row[i];
    }
    for (double& m : mean) m /= static_cast<double>(n);

    const std::size_t block = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::cbrt(static_cast<double>(n)))));
    auto engine = make_engine(cfg.seed, "mcs/bootstrap");
    std::uniform_int_distribution<std::size_t> start_dist(0, n - block);
    std::vector<std::vector<double>> boot(cfg.bootstrap, std::vector<double>(k, 0.0));
    for (auto& bm : boot) {
        std::size_t filled = 0;
        while (filled < n) {
            const std::size_t s = start_dist(engine);
            for (std::size_t j = 0; j < block && filled < n; ++j, ++filled) {
                const auto& row = losses[s + j];
                for (std::size_t i = 0; i < k; ++i) bm[i] += row[i];
            }
        }
        for (double& v : bm) v /= static_cast<double>(n);
    }

    // Bootstrap variance of each pairwise mean differential.
    std::vector<std::vector<double>> var(k, std::vector<double>(k, 0.0));
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = i + 1; j < k; ++j) {
            const double dbar = mean[i] - mean[j];
            double s = 0.0;
            for (const auto& bm : boot) {
                const double e = (bm[i] - bm[j]) - dbar;
                s += e * e;
            }
            var[i][j] = var[j][i] = s / static_cast<double>(cfg.bootstrap);
        }
    }
    auto t_stat = [&](std::size_t i, std::size_t j) {
        const double dbar = mean[i] - mean[j];
        if (var[i][j] > 0.0) return dbar / std::sqrt(var[i][j]);
        if (dbar == 0.0) return 0.0;
        return dbar > 0.0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
    };

    McsResult result;
    std::vector<std::size_t> alive(k);
    std::iota(alive.begin(), alive.end(), 0);
    while (alive.size() > 1) {
        double t_range = 0.0;
        for (std::size_t a = 0; a < alive.size(); ++a) {
            for (std::size_t b = a + 1; b < alive.size(); ++b) {
                t_range = std::max(t_range, std::abs(t_stat(alive[a], alive[b])));
            }
        }
        std::size_t exceed = 0;
        for (const auto& bm : boot) {
            double tb = 0.0;
            for (std::size_t a = 0; a < alive.size(); ++a) {
                for (std::size_t b = a + 1; b < alive.size(); ++b) {
                    const std::size_t i = alive[a], j = alive[b];
                    if (!(var[i][j] > 0.0)) continue;
                    const double centered = (bm[i] - bm[j]) - (mean[i] - mean[j]);
                    tb = std::max(tb, std::abs(centered) / std::sqrt(var[i][j]));
                }
            }
            if (tb >= t_range) ++exceed;
        }
        const double p = static_cast<double>(exceed) / static_cast<double>(cfg.bootstrap);
        if (!(p < cfg.alpha)) break;

        std::size_t worst = alive.front();
        double worst_t = -std::numeric_limits<double>::infinity();
        for (std::size_t i : alive) {
            double ti = -std::numeric_limits<double>::infinity();
            for (std::size_t j : alive) {
                if (j != i) ti = std::max(ti, t_stat(i, j));
            }
            if (ti > worst_t) {
                worst_t = ti;
                worst = i;
            }
        }
        result.eliminated.push_back(worst);
        result.p_values.push_back(p);
        alive.erase(std::find(alive.begin(), alive.end(), worst));
    }
    result.survivors = alive;
    return result;
}

}  // namespace volxfer::eval
