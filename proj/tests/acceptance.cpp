// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <mutex>
#include <random>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "volxfer/boosted.h"
#include "volxfer/dtw.h"
#include "volxfer/evaluation.h"
#include "volxfer/fnn.h"
#include "volxfer/har.h"
#include "volxfer/harness.h"
#include "volxfer/rng.h"
#include "volxfer/runner.h"
#include "volxfer/synth.h"
#include "volxfer/transfer_select.h"

using namespace volxfer;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("volxfer_acceptance_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

// Silences the CLI summary printed by runner::forecast.
struct MuteStdout {
    std::ostringstream sink;
    std::streambuf* saved = std::cout.rdbuf(sink.rdbuf());
    ~MuteStdout() { std::cout.rdbuf(saved); }
};

dtw::Sequence random_sequence(std::mt19937_64& rng, std::size_t n, std::size_t dim) {
    std::normal_distribution<double> z;
    std::vector<FeatureVector> pts(n, FeatureVector(dim));
    for (auto& p : pts)
        for (double& v : p) v = z(rng);
    return dtw::Sequence(pts);
}

Outcome dtw_oracle() {
    std::mt19937_64 rng(derive_seed(1, "acceptance/dtw"));
    const auto t0 = Clock::now();
    std::size_t pairs = 0, mismatches = 0;
    while (pairs < 600) {
        const std::size_t n = 1 + rng() % 6, m = 1 + rng() % 6;
        if (n * m > dtw::kBruteForceMaxCells) continue;
        const std::size_t dim = 2 + rng() % 3;
        const auto t = random_sequence(rng, n, dim);
        const auto s = random_sequence(rng, m, dim);
        if (dtw::dtw_distance(t, s) != dtw::brute_force_dtw(t, s)) ++mismatches;
        ++pairs;
    }
    const double secs = seconds_since(t0);
    return {mismatches == 0 && secs < 5.0, fmt::format("{} pairs, {} mismatches, {:.3f} s", pairs, mismatches, secs)};
}

Outcome subsequence_bookkeeping() {
    std::mt19937_64 rng(derive_seed(2, "acceptance/subsequences"));
    const auto t0 = Clock::now();
    const Date start = parse_date("2010-01-01");
    std::size_t failures = 0;
    for (int rep = 0; rep < 1000; ++rep) {
        const std::size_t n = rng() % 300;
        const std::size_t m = 1 + rng() % 50;
        data::SupervisedDataSet ds;
        for (std::size_t i = 0; i < n; ++i) {
            const Date d = start + std::chrono::days{static_cast<int>(i)};
            const double v = static_cast<double>(i);
            ds.rows.push_back({{v, v, v}, v, "A", d - std::chrono::days{1}, d});
        }
        const auto subs = transfer::generate_subsequences(ds, m, 3);
        const std::size_t excess = n % m;
        bool ok = subs.size() == (n - excess) / m;
        std::set<std::size_t> used;
        for (std::size_t k = 0; k < subs.size() && ok; ++k) {
            ok = subs[k].rows.size() == m && subs[k].start_index == excess + k * m + 1 && subs[k].asset_id == "A";
            for (const auto& row : subs[k].rows) {
                const auto idx = static_cast<std::size_t>(row.y);
                ok = ok && idx >= excess && used.insert(idx).second;
            }
        }
        ok = ok && used.size() == n - excess;
        if (!ok) ++failures;
    }
    const double secs = seconds_since(t0);
    return {failures == 0 && secs < 1.0, fmt::format("1000 (N, m) pairs, {} failures, {:.3f} s", failures, secs)};
}

data::SupervisedDataSet linear_rows(std::mt19937_64& rng, std::size_t n, const std::vector<double>& beta, double noise) {
    std::normal_distribution<double> z;
    data::SupervisedDataSet ds;
    const Date start = parse_date("2010-01-01");
    for (std::size_t i = 0; i < n; ++i) {
        data::LabeledRow row;
        row.asset = "A";
        row.feature_date = start + std::chrono::days{static_cast<int>(i)};
        row.label_date = row.feature_date + std::chrono::days{1};
        row.y = beta[0];
        for (std::size_t k = 1; k < beta.size(); ++k) {
            row.x.push_back(std::abs(z(rng)));
            row.y += beta[k] * row.x.back();
        }
        row.y += noise * z(rng);
        ds.rows.push_back(std::move(row));
    }
    return ds;
}

Outcome ols_recovery() {
    std::mt19937_64 rng(derive_seed(3, "acceptance/ols"));
    double worst_coef = 0.0, worst_orth = 0.0;
    for (int rep = 0; rep < 50; ++rep) {
        const std::vector<double> beta{0.1 * (rep + 1), 0.4, 0.35, 0.2};
        const auto exact = models::fit_har(linear_rows(rng, 60 + rep, beta, 0.0));
        for (std::size_t k = 0; k < beta.size(); ++k) {
            worst_coef = std::max(worst_coef, std::abs(exact.coefficients()[static_cast<Eigen::Index>(k)] - beta[k]));
        }
        const auto noisy_rows = linear_rows(rng, 100 + rep, beta, 0.3);
        const auto noisy = models::fit_har(noisy_rows);
        std::vector<double> dot(4, 0.0), norm(4, 0.0);
        double ynorm = 0.0;
        for (const auto& row : noisy_rows.rows) {
            const double e = row.y - noisy.predict(row.x);
            dot[0] += e;
            norm[0] += 1.0;
            for (std::size_t k = 0; k < 3; ++k) {
                dot[k + 1] += e * row.x[k];
                norm[k + 1] += row.x[k] * row.x[k];
            }
            ynorm += row.y * row.y;
        }
        for (std::size_t k = 0; k < 4; ++k) {
            worst_orth = std::max(worst_orth, std::abs(dot[k]) / std::sqrt(norm[k] * ynorm));
        }
    }
    return {worst_coef < 1e-8 && worst_orth < 1e-6,
            fmt::format("max coefficient error {:.2e}, max relative X'e {:.2e}", worst_coef, worst_orth)};
}

Outcome fnn_gradient() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(derive_seed(4, "acceptance/fnn"));
    std::normal_distribution<double> z;
    double worst = 0.0;
    std::size_t params = 0;
    for (std::size_t width : {1, 3, 11}) {
        auto model = models::FnnModel::initialize(width, derive_seed(4, "init/" + std::to_string(width)));
        for (auto& b : model.biases)
            for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = 0.1 * z(rng);
        Eigen::MatrixXd x(20, static_cast<Eigen::Index>(width));
        Eigen::VectorXd y(20);
        for (Eigen::Index i = 0; i < 20; ++i) {
            for (Eigen::Index k = 0; k < x.cols(); ++k) x(i, k) = z(rng);
            y[i] = z(rng);
        }
        models::FnnGradients grad;
        model.loss_and_gradient(x, y, &grad);
        const double h = 1e-6;
        auto check = [&](double& param, double analytic) {
            const double saved = param;
            param = saved + h;
            const double up = model.loss_and_gradient(x, y, nullptr);
            param = saved - h;
            const double down = model.loss_and_gradient(x, y, nullptr);
            param = saved;
            const double fd = (up - down) / (2 * h);
            const double scale = std::max({std::abs(fd), std::abs(analytic), 1e-8});
            worst = std::max(worst, std::abs(fd - analytic) / scale);
            ++params;
        };
        for (std::size_t l = 0; l < models::kLayers; ++l) {
            for (Eigen::Index i = 0; i < model.weights[l].size(); ++i) check(model.weights[l].data()[i], grad.weights[l].data()[i]);
            for (Eigen::Index i = 0; i < model.biases[l].size(); ++i) check(model.biases[l][i], grad.biases[l][i]);
        }
    }
    const double secs = seconds_since(t0);
    return {worst < 1e-4 && secs < 10.0,
            fmt::format("{} parameters, max relative error {:.2e}, {:.3f} s", params, worst, secs)};
}

Outcome boosting_oracle() {
    auto rows = [](std::vector<double> x, std::vector<double> y) {
        data::SupervisedDataSet ds;
        ds.kind = data::PredictorKind::Std1;
        const Date d = parse_date("2010-01-01");
        for (std::size_t i = 0; i < x.size(); ++i) ds.rows.push_back({{x[i]}, y[i], "A", d, d + std::chrono::days{1}});
        return ds;
    };
    models::FitConfig cfg;
    cfg.boost.rounds = 1;
    cfg.boost.subsample = 1.0;
    cfg.boost.base_score = 0.0;
    const auto stump = models::fit_boosted(rows({1, 2, 3, 4}, {1, 1, 1, 1}), cfg);
    const double weight = stump.trees()[0].nodes[0].weight;
    const double pred = stump.predict(std::vector<double>{2.0});

    cfg.boost.base_score = 5.0;
    const auto split = models::fit_boosted(rows({0, 0, 1, 1}, {0, 0, 10, 10}), cfg);
    const auto& root = split.trees()[0].nodes[0];
    // G_L = 10, G_R = -10, H_L = H_R = 2, lambda = 1, gamma = 0.1
    const double hand = 0.5 * (10.0 * 10.0 / 3.0 + 10.0 * 10.0 / 3.0 - 0.0 / 5.0) - 0.1;
    const double gain_err = std::abs(root.gain - hand);
    return {weight == 0.8 && pred == 0.08 && !root.is_leaf() && gain_err < 1e-10,
            fmt::format("leaf weight {}, prediction {}, gain error {:.1e}", format_double(weight),
                        format_double(pred), gain_err)};
}

Outcome dm_mcs_oracle() {
    std::mt19937_64 rng(derive_seed(6, "acceptance/dm"));
    std::normal_distribution<double> z;
    double worst = 0.0;
    for (int rep = 0; rep < 200; ++rep) {
        const std::size_t n = 10 + rng() % 500;
        std::vector<double> a(n), b(n);
        for (std::size_t t = 0; t < n; ++t) {
            a[t] = std::pow(z(rng), 2);
            b[t] = std::pow(z(rng) + 0.2, 2);
        }
        long double mean = 0.0L;
        for (std::size_t t = 0; t < n; ++t) mean += static_cast<long double>(a[t]) - b[t];
        mean /= n;
        long double var = 0.0L;
        for (std::size_t t = 0; t < n; ++t) {
            const long double e = static_cast<long double>(a[t]) - b[t] - mean;
            var += e * e;
        }
        var /= n;
        const double oracle = static_cast<double>(mean / std::sqrt(var / n));
        worst = std::max(worst, std::abs(eval::dm_test(a, b).statistic - oracle) / std::max(1.0, std::abs(oracle)));
    }

    std::size_t eliminated = 0;
    for (int rep = 0; rep < 100; ++rep) {
        auto engine = make_engine(6, "acceptance/mcs/" + std::to_string(rep));
        eval::LossMatrix losses(100, std::vector<double>(3));
        for (auto& row : losses) {
            for (std::size_t k = 0; k < 3; ++k) row[k] = std::pow(z(engine), 2) + (k == 2 ? 1.0 : 0.0);
        }
        eval::McsConfig cfg;
        cfg.bootstrap = 1000;
        cfg.seed = derive_seed(6, "mcs/" + std::to_string(rep));
        const auto result = eval::model_confidence_set(losses, cfg);
        if (std::find(result.survivors.begin(), result.survivors.end(), 2) == result.survivors.end()) ++eliminated;
    }
    return {worst < 1e-12 && eliminated >= 95,
            fmt::format("DM max deviation {:.1e}, dominated model eliminated in {}/100", worst, eliminated)};
}

fs::path quick_fixture(const std::string& name) {
    const fs::path dir = scratch(name);
    synth::PanelSpec spec;
    spec.sources = 3;
    spec.targets = 1;
    spec.days = 300;
    spec.target_days = 160;
    spec.seed = 7;
    spec.quick = true;
    synth::write_fixture(dir, spec);
    return dir;
}

Outcome no_look_ahead() {
    const fs::path dir = quick_fixture("lookahead");
    runner::RunOptions opts;
    opts.config = dir / "config.toml";
    const auto cfg = runner::resolve_config(opts);
    const auto ds = runner::load_dataset(cfg);
    auto hc = runner::harness_config(cfg);
    std::mutex mutex;
    std::size_t fits = 0, rows = 0, late = 0;
    hc.observer = [&](const harness::TrainingObservation& obs) {
        std::size_t bad = 0;
        for (const auto& row : obs.data.rows) bad += row.label_date > obs.origin_date || row.feature_date >= row.label_date;
        std::lock_guard lock(mutex);
        ++fits;
        rows += obs.data.size();
        late += bad;
    };
    std::size_t records = 0;
    for (const auto& period : cfg.sample_periods()) {
        records += harness::rolling_evaluate(ds.targets, ds.sources, runner::specs_for(cfg, period), period, hc)
                       .records.size();
    }
    fs::remove_all(dir);
    return {late == 0 && fits > 0, fmt::format("{} training sets, {} rows scanned, {} after their origin, {} records",
                                               fits, rows, late, records)};
}

// Ten daily sources, one target; the target and the first four sources
// share one HAR process, the other six follow a different one.
Outcome directional_transfer() {
    const auto t0 = Clock::now();
    const synth::HarDynamics shared{1e-4, 0.35, 0.35, 0.2, 0.5, true};
    const synth::HarDynamics other{4e-4, 0.6, 0.1, 0.1, 0.35, true};
    const std::size_t source_days = 600, target_days = 160;
    const auto dates = synth::business_days(parse_date("2012-01-02"), source_days);
    const std::vector<Date> target_dates(dates.end() - target_days, dates.end());
    const std::vector<harness::ModelSpec> specs{harness::ModelSpec::parse("TO HAR-STD"),
                                                harness::ModelSpec::parse("NP HAR-STD"),
                                                harness::ModelSpec::parse("MTL-50 HAR-STD")};
    std::size_t wins = 0;
    std::string detail;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        std::vector<harness::AssetPanel> sources, targets;
        for (int i = 0; i < 10; ++i) {
            const std::string id = "S" + std::to_string(i);
            auto engine = make_engine(seed, "synth/" + id);
            const auto rv = synth::simulate_rv(i < 4 ? shared : other, source_days, engine);
            sources.push_back(synth::daily_panel(id, rv, dates, engine));
        }
        auto engine = make_engine(seed, "synth/T");
        const auto rv = synth::simulate_rv(shared, target_days, engine);
        targets.push_back(synth::daily_panel("T", rv, target_dates, engine));

        harness::HarnessConfig hc;
        hc.seed = seed;
        const auto result = harness::rolling_evaluate(targets, sources, specs, harness::standard_period(50), hc);
        std::map<std::string, double> se;
        for (const auto& r : result.records) {
            if (!r.failed) se[r.model] += std::pow(r.forecast - r.actual, 2);
        }
        const double mtl = se["MTL-50 HAR-STD"], to = se["TO HAR-STD"], np = se["NP HAR-STD"];
        const bool win = mtl < to && mtl < np;
        wins += win;
        detail += fmt::format(" {}:{}", seed, win ? "W" : "L");
    }
    const double secs = seconds_since(t0);
    return {wins >= 8 && secs < 300.0, fmt::format("MTL-50 HAR best in {}/10 seeds [{} ], {:.1f} s", wins, detail, secs)};
}

std::map<std::string, std::string> read_reports(const fs::path& dir) {
    std::map<std::string, std::string> out;
    for (const auto& entry : fs::directory_iterator(dir)) {
        std::ifstream in(entry.path(), std::ios::binary);
        std::ostringstream s;
        s << in.rdbuf();
        out[entry.path().filename().string()] = s.str();
    }
    return out;
}

Outcome determinism() {
    const fs::path dir = quick_fixture("determinism");
    runner::RunOptions a, b;
    a.config = b.config = dir / "config.toml";
    a.out = dir / "run_a";
    b.out = dir / "run_b";
    {
        MuteStdout mute;
        runner::forecast(a);
        runner::forecast(b);
    }
    const auto ra = read_reports(dir / "run_a" / "reports");
    const auto rb = read_reports(dir / "run_b" / "reports");
    std::size_t bytes = 0;
    for (const auto& [name, content] : ra) bytes += content.size();
    const bool same = !ra.empty() && ra == rb;
    fs::remove_all(dir);
    return {same, fmt::format("{} report files, {} bytes, {}", ra.size(), bytes, same ? "identical" : "different")};
}

Outcome scarcity_counts() {
    const synth::HarDynamics dyn;
    const auto dates = synth::business_days(parse_date("2012-01-02"), 300);
    std::vector<harness::AssetPanel> sources, targets;
    for (int i = 0; i < 3; ++i) {
        auto engine = make_engine(10, "synth/S" + std::to_string(i));
        sources.push_back(synth::daily_panel("S" + std::to_string(i), synth::simulate_rv(dyn, 300, engine), dates, engine));
    }
    auto engine = make_engine(10, "synth/T");
    const std::vector<Date> tdates(dates.end() - 60, dates.end());
    targets.push_back(synth::daily_panel("T", synth::simulate_rv(dyn, 60, engine), tdates, engine));

    const std::vector<transfer::Approach> approaches{transfer::Approach::TargetOnly, transfer::Approach::NaivePooling,
                                                     transfer::Approach::MultiSource};
    const std::vector<double> eps{50};
    const std::vector<models::Family> families{models::Family::Har, models::Family::Boosted};
    const std::vector<data::PredictorKind> kinds{data::PredictorKind::Std};
    harness::HarnessConfig hc;
    hc.fit.boost.rounds = 5;
    bool ok = true;
    std::string detail;
    for (std::size_t s : {1, 5, 22}) {
        const auto period = harness::scarcity_period(s);
        const auto specs = harness::expand_specs(approaches, eps, families, kinds, period);
        const auto result = harness::rolling_evaluate(targets, sources, specs, period, hc);
        std::map<std::string, std::size_t> records, fits;
        for (const auto& r : result.records) ++records[r.model];
        for (const auto& f : result.fits) ++fits[f.model];
        const std::size_t expected = period.eval_len;
        for (const auto& spec : specs) ok = ok && records[spec.id()] == expected && fits[spec.id()] == expected;
        ok = ok && records[harness::kNaiveModelId] == expected && period.reestimate_every == 1;
        detail += fmt::format("{}s={}: {} models x {} records/fits", detail.empty() ? "" : "; ", s, specs.size(),
                              records[specs.front().id()]);
    }
    return {ok, detail};
}

}  // namespace

int main() {
    spdlog::set_level(spdlog::level::warn);
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"dtw oracle equivalence", dtw_oracle},
        {"subsequence bookkeeping", subsequence_bookkeeping},
        {"ols recovery", ols_recovery},
        {"fnn gradient check", fnn_gradient},
        {"boosting hand oracle", boosting_oracle},
        {"dm and mcs oracles", dm_mcs_oracle},
        {"no look-ahead audit", no_look_ahead},
        {"directional synthetic transfer", directional_transfer},
        {"determinism", determinism},
        {"scarcity protocol", scarcity_counts},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        std::cout << fmt::format("{} {:>2} {}: {}", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail)
                  << std::endl;
        failed += !o.pass;
    }
    return failed == 0 ? 0 : 1;
}
