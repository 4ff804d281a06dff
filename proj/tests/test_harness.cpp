#include <catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <mutex>

#include "volxfer/harness.h"
#include "volxfer/rng.h"
#include "volxfer/synth.h"

using namespace volxfer;
using namespace volxfer::harness;
using data::PredictorKind;
using transfer::Approach;

namespace {

AssetPanel make_panel(const std::string& id, std::size_t days, std::uint64_t seed, synth::HarDynamics dyn = {},
                      const char* start = "2015-01-05") {
    auto engine = make_engine(seed, id);
    const auto rv = synth::simulate_rv(dyn, days, engine);
    const auto dates = synth::business_days(parse_date(start), days);
    return synth::daily_panel(id, rv, dates, engine);
}

HarnessConfig light_config() {
    HarnessConfig cfg;
    cfg.seed = 3;
    cfg.fit.max_epochs = 15;
    cfg.fit.patience = 5;
    cfg.fit.boost.rounds = 5;
    return cfg;
}

std::map<std::string, std::size_t> count_by_model(const std::vector<ForecastRecord>& records) {
    std::map<std::string, std::size_t> out;
    for (const auto& r : records) ++out[r.model];
    return out;
}

}  // namespace

TEST_CASE("sample period geometry", "[harness]") {
    const auto p = standard_period(50);
    CHECK(p.first_origin() == 50);
    CHECK(p.last_origin() == 149);
    CHECK(p.fit_count() == 20);
    CHECK(p.required_days() == 150);
    CHECK(scarcity_period(1).fit_count() == 4);
    CHECK(scarcity_period(5).fit_count() == 17);
    CHECK(scarcity_period(22).fit_count() == 28);
    CHECK(scarcity_period(22).last_origin() == 49);
    CHECK_THROWS_AS(scarcity_period(3), ConfigError);
    CHECK_THROWS_AS(standard_period(10), ConfigError);
}

TEST_CASE("model ids round-trip", "[harness]") {
    for (const char* id : {"TO HAR-STD", "NP FNN-EXT-5", "MTL-50 XGB-STD-1", "MTL-12.5 HAR-EXT"}) {
        CHECK(ModelSpec::parse(id).id() == id);
    }
    CHECK_THROWS(ModelSpec::parse("MTL HAR-STD"));
    CHECK_THROWS(ModelSpec::parse("TO HAR"));
    CHECK_THROWS(ModelSpec::parse("XX HAR-STD"));

    const std::vector<Approach> approaches{Approach::TargetOnly, Approach::MultiSource};
    const std::vector<double> eps{25, 75};
    const std::vector<models::Family> families{models::Family::Har};
    const std::vector<PredictorKind> kinds{PredictorKind::Std, PredictorKind::Ext};
    CHECK(expand_specs(approaches, eps, families, kinds, standard_period(50)).size() == 6);
    CHECK(expand_specs(approaches, eps, families, kinds, scarcity_period(1)).size() == 6);
    CHECK(expand_specs(approaches, eps, families, kinds, scarcity_period(5)).size() == 12);
    const auto s22 = expand_specs(approaches, eps, families, kinds, scarcity_period(22));
    CHECK(s22.size() == 18);
    for (const auto& s : expand_specs(approaches, eps, families, kinds, scarcity_period(5))) {
        CHECK(data::horizon_of(s.kind) <= 5);
    }
}

TEST_CASE("standard period record and fit counts", "[harness]") {
    const std::vector<AssetPanel> targets{make_panel("T", 160, 1)};
    const std::vector<AssetPanel> sources{make_panel("S1", 300, 2), make_panel("S2", 300, 3)};
    const std::vector<ModelSpec> specs{ModelSpec::parse("TO HAR-STD"), ModelSpec::parse("NP XGB-STD"),
                                       ModelSpec::parse("MTL-50 FNN-STD")};
    const auto result = rolling_evaluate(targets, sources, specs, standard_period(50), light_config());
    const auto counts = count_by_model(result.records);
    for (const auto& spec : specs) CHECK(counts.at(spec.id()) == 100);
    CHECK(counts.at(kNaiveModelId) == 100);
    CHECK(result.fits.size() == 60);
    for (const auto& f : result.fits) CHECK_FALSE(f.failed);
    for (const auto& r : result.records) CHECK_FALSE(r.failed);

    // Later FNN fits reuse the first fit's epoch count.
    std::size_t first_epochs = 0;
    for (const auto& f : result.fits) {
        if (f.model != "MTL-50 FNN-STD") continue;
        if (first_epochs == 0) first_epochs = f.epochs;
        CHECK(f.epochs == first_epochs);
    }

    // Too-short targets are skipped.
    const std::vector<AssetPanel> short_target{make_panel("U", 149, 4)};
    const auto skipped = rolling_evaluate(short_target, sources, specs, standard_period(50), light_config());
    CHECK(skipped.records.empty());
    CHECK(skipped.skipped_assets == std::vector<std::string>{"U"});
}

TEST_CASE("scarcity counts and zero-row failures", "[harness]") {
    // The target lists a year after the source starts.
    const std::vector<AssetPanel> targets{make_panel("T", 60, 5, {}, "2016-01-04")};
    const std::vector<AssetPanel> sources{make_panel("S1", 400, 6)};
    const std::vector<Approach> approaches{Approach::TargetOnly, Approach::NaivePooling};
    const std::vector<double> eps;
    const std::vector<models::Family> families{models::Family::Har};
    const std::vector<PredictorKind> kinds{PredictorKind::Std};
    for (auto [s, n] : {std::pair<std::size_t, std::size_t>{1, 4}, {5, 17}, {22, 28}}) {
        const auto period = scarcity_period(s);
        const auto specs = expand_specs(approaches, eps, families, kinds, period);
        const auto result = rolling_evaluate(targets, sources, specs, period, light_config());
        for (const auto& spec : specs) {
            std::size_t records = 0, fits = 0;
            for (const auto& r : result.records) records += r.model == spec.id();
            for (const auto& f : result.fits) fits += f.model == spec.id();
            CHECK(records == n);
            CHECK(fits == n);
        }
        // The horizon-matched target-only model has no labeled rows at its
        // first origin.
        const std::string to_id = ModelSpec{Approach::TargetOnly, 0, models::Family::Har,
                                            data::with_horizon(PredictorKind::Std, static_cast<int>(s))}.id();
        for (const auto& f : result.fits) {
            if (f.model == to_id && f.origin_day == s) {
                CHECK(f.failed);
                CHECK(f.rows == 0);
            } else {
                CHECK_FALSE(f.failed);
            }
        }
    }
}

TEST_CASE("training data never looks past the origin", "[harness]") {
    const std::vector<AssetPanel> targets{make_panel("T", 160, 7)};
    const std::vector<AssetPanel> sources{make_panel("S1", 300, 8), make_panel("S2", 300, 9)};
    const std::vector<ModelSpec> specs{ModelSpec::parse("TO HAR-STD"), ModelSpec::parse("NP HAR-STD"),
                                       ModelSpec::parse("MTL-25 HAR-STD")};
    auto cfg = light_config();
    cfg.threads = 4;
    cfg.collect_snapshots = true;
    std::mutex mutex;
    std::size_t observed = 0, violations = 0;
    cfg.observer = [&](const TrainingObservation& obs) {
        std::lock_guard lock(mutex);
        ++observed;
        CHECK(obs.origin_date == targets[0].records[obs.origin_day - 1].date);
        for (const auto& row : obs.data.rows) {
            if (row.label_date > obs.origin_date || row.feature_date >= row.label_date) ++violations;
        }
    };
    const auto result = rolling_evaluate(targets, sources, specs, standard_period(50), cfg);
    CHECK(observed == 60);
    CHECK(violations == 0);

    // The last fit's forecasts recomputed from its snapshot and the origin's
    // own features.
    for (const auto& snap : result.snapshots) {
        const auto model = models::from_json(snap.model_json);
        for (const auto& r : result.records) {
            if (r.model != snap.model || r.fit_day != snap.origin_day) continue;
            const auto x = data::extract_features(targets[0].records[r.origin_day - 1], PredictorKind::Std);
            REQUIRE(x.has_value());
            CHECK(model->predict(*x) == r.prediction);
        }
    }

    // NF and actuals by direct indexing.
    const auto& rec = targets[0].records;
    for (const auto& r : result.records) {
        CHECK(r.actual == rec[r.origin_day].rv_d);
        if (r.model == kNaiveModelId) CHECK(r.forecast == rec[r.origin_day - 1].rv_d);
        if (!r.failed && !r.clamped) CHECK(r.forecast == r.prediction);
    }
}

TEST_CASE("thread count does not change results", "[harness]") {
    const std::vector<AssetPanel> targets{make_panel("T", 160, 10), make_panel("V", 160, 11)};
    const std::vector<AssetPanel> sources{make_panel("S1", 300, 12), make_panel("S2", 300, 13)};
    const std::vector<ModelSpec> specs{ModelSpec::parse("NP FNN-STD"), ModelSpec::parse("MTL-50 XGB-STD")};
    auto one = light_config();
    auto many = light_config();
    many.threads = 6;
    const auto a = rolling_evaluate(targets, sources, specs, standard_period(50), one);
    const auto b = rolling_evaluate(targets, sources, specs, standard_period(50), many);
    REQUIRE(a.records.size() == b.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        CHECK(a.records[i].model == b.records[i].model);
        CHECK(a.records[i].prediction == b.records[i].prediction);
    }
}

TEST_CASE("target-only HAR on a known HAR process", "[harness]") {
    synth::HarDynamics dyn;
    dyn.level = 1.0;
    dyn.noise = 0.05;
    dyn.multiplicative = false;
    const std::vector<AssetPanel> targets{make_panel("T", 2001, 14, dyn)};
    const std::vector<ModelSpec> specs{ModelSpec::parse("TO HAR-STD")};
    const SamplePeriod long_period{"long", 1000, 1000, 50, false};
    const auto result = rolling_evaluate(targets, {}, specs, long_period, light_config());
    double se = 0.0;
    std::size_t n = 0;
    for (const auto& r : result.records) {
        if (r.model != "TO HAR-STD") continue;
        se += std::pow(r.forecast - r.actual, 2);
        ++n;
    }
    REQUIRE(n == 1000);
    const double mse = se / static_cast<double>(n);
    CHECK(std::abs(mse / (dyn.noise * dyn.noise) - 1.0) < 0.10);
}

TEST_CASE("transition strategies", "[harness]") {
    CHECK(transition_horizon(Strategy::OneOneOne, 40) == 1);
    CHECK(transition_horizon(Strategy::OneFiveFive, 5) == 1);
    CHECK(transition_horizon(Strategy::OneFiveFive, 6) == 5);
    CHECK(transition_horizon(Strategy::OneFiveFive, 40) == 5);
    CHECK(transition_horizon(Strategy::OneFiveTwentyTwo, 2) == 1);
    CHECK(transition_horizon(Strategy::OneFiveTwentyTwo, 22) == 5);
    CHECK(transition_horizon(Strategy::OneFiveTwentyTwo, 23) == 22);
    CHECK(parse_strategy("1-5-22") == Strategy::OneFiveTwentyTwo);
    CHECK_THROWS_AS(parse_strategy("1-22"), ConfigError);

    std::vector<ForecastRecord> recs;
    for (std::size_t o = 1; o <= 49; ++o) {
        for (const char* kind : {"STD-1", "STD-5", "STD"}) {
            const int h = data::horizon_of(data::parse_predictor_kind(kind));
            if (static_cast<std::size_t>(h) > o) continue;
            for (const char* approach : {"TO", "NP", "MTL-50"}) {
                ForecastRecord r;
                r.asset = "T";
                r.model = std::string(approach) + " HAR-" + kind;
                r.origin_day = o;
                recs.push_back(r);
            }
        }
        ForecastRecord nf;
        nf.asset = "T";
        nf.model = kNaiveModelId;
        nf.origin_day = o;
        recs.push_back(nf);
    }
    const auto composed = compose_strategy(Strategy::OneFiveTwentyTwo, recs);
    CHECK(composed.size() == 2 * 49);
    for (const auto& c : composed) {
        CHECK((c.model == "1-5-22 NP HAR-STD" || c.model == "1-5-22 MTL-50 HAR-STD"));
        CHECK(c.period == "1-5-22");
    }
}
