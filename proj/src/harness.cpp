#include "volxfer/harness.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "volxfer/fnn.h"
#include "volxfer/parallel.h"
#include "volxfer/rng.h"

namespace volxfer::harness {

using data::PredictorKind;
using transfer::Approach;

SamplePeriod standard_period(std::size_t s) {
    if (s < data::kMonthDays) throw ConfigError("standard sample period must start at day 22 or later");
    return {std::to_string(s), s, kStandardEvalLength, kStandardReestimation, false};
}

SamplePeriod scarcity_period(std::size_t s) {
    switch (s) {
        case 1: return {"1", 1, 4, 1, true};
        case 5: return {"5", 5, 17, 1, true};
        case 22: return {"22", 22, 28, 1, true};
        default: throw ConfigError("scarcity period must be 1, 5 or 22, got " + std::to_string(s));
    }
}

std::string ModelSpec::id() const {
    std::string approach_name(transfer::to_string(approach));
    if (approach == Approach::MultiSource) approach_name += "-" + format_double(epsilon);
    return approach_name + " " + std::string(models::to_string(family)) + "-" + std::string(data::to_string(kind));
}

ModelSpec ModelSpec::parse(std::string_view id) {
    const auto space = id.find(' ');
    if (space == std::string_view::npos) throw ValidationError("malformed model id '" + std::string(id) + "'");
    const std::string_view approach = id.substr(0, space);
    const std::string_view rest = id.substr(space + 1);
    const auto dash = rest.find('-');
    if (dash == std::string_view::npos) throw ValidationError("malformed model id '" + std::string(id) + "'");

    ModelSpec spec;
    if (approach.starts_with("MTL-")) {
        spec.approach = Approach::MultiSource;
        const std::string eps(approach.substr(4));
        try {
            std::size_t used = 0;
            spec.epsilon = std::stod(eps, &used);
            if (used != eps.size()) throw std::invalid_argument(eps);
        } catch (const std::exception&) {
            throw ValidationError("malformed model id '" + std::string(id) + "'");
        }
    } else {
        spec.approach = transfer::parse_approach(approach);
        if (spec.approach == Approach::MultiSource) throw ValidationError("MTL model id needs an epsilon");
    }
    spec.family = models::parse_family(rest.substr(0, dash));
    spec.kind = data::parse_predictor_kind(rest.substr(dash + 1));
    return spec;
}

std::vector<ModelSpec> expand_specs(std::span<const Approach> approaches, std::span<const double> epsilons,
                                    std::span<const models::Family> families,
                                    std::span<const PredictorKind> base_kinds, const SamplePeriod& period) {
    std::vector<int> horizons;
    if (period.scarcity) {
        for (int h : {1, 5, 22}) {
            if (static_cast<std::size_t>(h) <= period.train_end) horizons.push_back(h);
        }
    } else {
        horizons.push_back(22);
    }
    std::vector<ModelSpec> specs;
    for (Approach a : approaches) {
        std::vector<double> eps{0.0};
        if (a == Approach::MultiSource) eps.assign(epsilons.begin(), epsilons.end());
        for (double e : eps) {
            for (models::Family f : families) {
                for (PredictorKind k : base_kinds) {
                    for (int h : horizons) specs.push_back({a, e, f, data::with_horizon(k, h)});
                }
            }
        }
    }
    return specs;
}

namespace {

struct TargetContext {
    const AssetPanel* panel = nullptr;
    std::vector<double> running_min;  // min rv_d over days 1..d
    std::map<PredictorKind, data::SupervisedDataSet> assembled;
    std::map<PredictorKind, std::vector<data::FeatureRow>> features;
    std::map<PredictorKind, std::vector<const FeatureVector*>> x_by_day;  // index d - 1

    Date date_of(std::size_t day) const { return panel->records[day - 1].date; }
};

// Per (target, kind) data at one re-estimation origin.
struct StepData {
    data::SupervisedDataSet target;
    std::vector<data::SupervisedDataSet> sources;
    std::vector<transfer::RankedSubsequence> ranked;
};

struct Engine {
    std::vector<TargetContext> targets;
    std::vector<std::map<PredictorKind, data::SupervisedDataSet>> sources;
    std::vector<PredictorKind> kinds;          // every kind in use
    std::set<PredictorKind> pooled_kinds;      // kinds with NP or MTL specs
    std::set<PredictorKind> ranked_kinds;      // kinds with MTL specs
    std::vector<std::string> skipped;
};

Engine prepare(std::span<const AssetPanel> targets, std::span<const AssetPanel> sources,
               std::span<const PredictorKind> kinds, const std::set<PredictorKind>& pooled,
               const std::set<PredictorKind>& ranked, const SamplePeriod& period) {
    Engine e;
    e.kinds.assign(kinds.begin(), kinds.end());
    e.pooled_kinds = pooled;
    e.ranked_kinds = ranked;
    for (const auto& panel : targets) {
        if (panel.records.size() < period.required_days()) {
            e.skipped.push_back(panel.id);
            continue;
        }
        TargetContext ctx;
        ctx.panel = &panel;
        double lowest = std::numeric_limits<double>::infinity();
        for (const auto& r : panel.records) {
            lowest = std::min(lowest, r.rv_d);
            ctx.running_min.push_back(lowest);
        }
        for (PredictorKind k : kinds) {
            ctx.assembled[k] = data::assemble(panel.records, k, panel.id);
            ctx.features[k] = data::feature_rows(panel.records, k);
        }
        for (PredictorKind k : kinds) {
            auto& by_day = ctx.x_by_day[k];
            by_day.assign(panel.records.size(), nullptr);
            for (const auto& row : ctx.features[k]) by_day[row.day - 1] = &row.x;
        }
        e.targets.push_back(std::move(ctx));
    }
    for (const auto& panel : sources) {
        std::map<PredictorKind, data::SupervisedDataSet> per_kind;
        for (PredictorKind k : kinds) {
            if (pooled.contains(k)) per_kind[k] = data::assemble(panel.records, k, panel.id);
        }
        e.sources.push_back(std::move(per_kind));
    }
    return e;
}

// Target and source training data plus the MTL ranking for each
// (target, kind) pair at the given origin.
std::vector<StepData> prepare_step(const Engine& e, std::size_t origin, const HarnessConfig& cfg,
                                   transfer::SubsequenceCache& cache) {
    const std::size_t nk = e.kinds.size();
    std::vector<StepData> out(e.targets.size() * nk);
    parallel_for(out.size(), cfg.threads, [&](std::size_t i) {
        const TargetContext& t = e.targets[i / nk];
        const PredictorKind kind = e.kinds[i % nk];
        const Date cutoff = t.date_of(origin);
        StepData& step = out[i];
        step.target = data::truncate_to(t.assembled.at(kind), cutoff);
        if (!e.pooled_kinds.contains(kind)) return;
        for (const auto& src : e.sources) step.sources.push_back(data::truncate_to(src.at(kind), cutoff));
        if (!e.ranked_kinds.contains(kind)) return;

        const auto& rows = t.features.at(kind);
        const auto available = static_cast<std::size_t>(
            std::upper_bound(rows.begin(), rows.end(), cutoff,
                             [](Date d, const data::FeatureRow& r) { return d < r.date; }) -
            rows.begin());
        const std::size_t m = std::min(available, cfg.subsequence_length);
        if (m == 0) return;
        const std::size_t vol = data::volatility_width(kind);
        const dtw::Sequence window = transfer::target_window(rows, cutoff, m, vol);
        const auto universe = transfer::build_universe(step.sources, m, &cache);
        step.ranked = transfer::rank_by_similarity(window, universe, 1);
    });
    return out;
}

std::vector<transfer::AuditRow> audit_rows(const std::vector<transfer::RankedSubsequence>& ranked,
                                           double epsilon, Date origin) {
    std::set<const transfer::Subsequence*> chosen;
    for (const auto& s : transfer::select_by_percentile(ranked, epsilon)) chosen.insert(s.item.get());
    std::vector<transfer::AuditRow> rows;
    rows.reserve(ranked.size());
    for (const auto& r : ranked) {
        rows.push_back({origin, r.item->asset_id, r.item->start_index, r.distance, chosen.contains(r.item.get())});
    }
    return rows;
}

std::vector<std::size_t> reestimation_origins(const SamplePeriod& period) {
    std::vector<std::size_t> out;
    for (std::size_t o = period.first_origin(); o <= period.last_origin(); o += period.reestimate_every) {
        out.push_back(o);
    }
    return out;
}

struct TaskState {
    std::optional<std::size_t> epochs;
    std::vector<ForecastRecord> records;
    std::vector<FitSummary> fits;
    std::optional<Snapshot> snapshot;
};

std::size_t batch_size_for(const ModelSpec& spec, const SamplePeriod& period, const HarnessConfig& cfg) {
    switch (spec.approach) {
        case Approach::TargetOnly: return period.scarcity ? cfg.batch_target_only_scarcity : cfg.batch_target_only;
        case Approach::NaivePooling: return cfg.batch_pooled;
        case Approach::MultiSource: return cfg.batch_multi_source;
    }
    return cfg.batch_pooled;
}

void run_fit(const TargetContext& t, const ModelSpec& spec, const std::string& model_id, const StepData& step,
             std::size_t origin, std::size_t block_end, const SamplePeriod& period, const HarnessConfig& cfg,
             TaskState& state) {
    const Date cutoff = t.date_of(origin);
    transfer::TrainingSet training;
    switch (spec.approach) {
        case Approach::TargetOnly:
            training.data = step.target;
            break;
        case Approach::NaivePooling: {
            transfer::SelectionConfig sc;
            sc.mode = Approach::NaivePooling;
            training = transfer::build_training_set(step.target, step.sources, sc, cutoff);
            break;
        }
        case Approach::MultiSource:
            training = transfer::pool_selected(step.target, step.ranked, spec.epsilon, cutoff);
            break;
    }
    transfer::check_alignment(training.data, cutoff);
    if (cfg.observer) cfg.observer({t.panel->id, model_id, origin, cutoff, training.data});

    models::FitConfig fc = cfg.fit;
    fc.batch_size = batch_size_for(spec, period, cfg);
    fc.fixed_epochs = state.epochs;
    fc.seed = derive_seed(cfg.seed, "fit/" + period.label + "/" + t.panel->id + "/" + model_id + "/" +
                                        std::to_string(origin));

    FitSummary summary{period.label, t.panel->id, model_id, origin, training.data.size(), 0, false, {}};
    models::RegressorPtr model;
    try {
        model = models::fit(spec.family, training.data, fc);
    } catch (const FitError& e) {
        summary.failed = true;
        summary.message = e.what();
    }
    if (model && spec.family == models::Family::Fnn) {
        summary.epochs = dynamic_cast<const models::FnnModel&>(*model).trained_epochs;
        if (!state.epochs) state.epochs = summary.epochs;
    }
    if (model && cfg.collect_snapshots) state.snapshot = Snapshot{period.label, t.panel->id, model_id, origin, model->to_json()};
    state.fits.push_back(summary);

    const auto& x_by_day = t.x_by_day.at(spec.kind);
    for (std::size_t o = origin; o <= block_end; ++o) {
        ForecastRecord rec;
        rec.period = period.label;
        rec.asset = t.panel->id;
        rec.model = model_id;
        rec.origin_day = o;
        rec.origin_date = t.date_of(o);
        rec.actual = t.panel->records[o].rv_d;
        rec.fit_day = origin;
        rec.train_rows = training.data.size();
        rec.forecast = rec.prediction = std::numeric_limits<double>::quiet_NaN();
        const FeatureVector* x = x_by_day[o - 1];
        if (!model || x == nullptr) {
            rec.failed = true;
        } else {
            rec.prediction = model->predict(*x);
            if (!std::isfinite(rec.prediction)) {
                rec.failed = true;
            } else {
                rec.clamped = rec.prediction < 0.0;
                rec.forecast = models::clamp_forecast(rec.prediction, t.running_min[o - 1]);
            }
        }
        state.records.push_back(rec);
    }
}

template <typename T, typename Key>
void sort_by(std::vector<T>& v, Key key) {
    std::stable_sort(v.begin(), v.end(), [&](const T& a, const T& b) { return key(a) < key(b); });
}

}  // namespace

PeriodResult rolling_evaluate(std::span<const AssetPanel> targets, std::span<const AssetPanel> sources,
                              std::span<const ModelSpec> specs, const SamplePeriod& period,
                              const HarnessConfig& cfg) {
    if (period.eval_len == 0 || period.reestimate_every == 0 || period.train_end == 0) {
        throw ValidationError("sample period '" + period.label + "' is empty");
    }
    std::vector<PredictorKind> kinds;
    std::set<PredictorKind> pooled, ranked;
    std::set<std::tuple<PredictorKind, double>> audit_keys;
    for (const auto& s : specs) {
        if (std::find(kinds.begin(), kinds.end(), s.kind) == kinds.end()) kinds.push_back(s.kind);
        if (s.approach != Approach::TargetOnly) pooled.insert(s.kind);
        if (s.approach == Approach::MultiSource) {
            ranked.insert(s.kind);
            audit_keys.emplace(s.kind, s.epsilon);
        }
    }
    const Engine engine = prepare(targets, sources, kinds, pooled, ranked, period);

    PeriodResult result;
    result.period = period;
    result.skipped_assets = engine.skipped;

    std::vector<std::string> ids;
    for (const auto& s : specs) ids.push_back(s.id());
    const std::size_t ns = specs.size();
    const std::size_t nk = kinds.size();
    std::vector<TaskState> states(engine.targets.size() * ns);
    std::map<std::tuple<std::size_t, PredictorKind, double>, std::vector<transfer::AuditRow>> audits;

    for (std::size_t origin : reestimation_origins(period)) {
        const std::size_t block_end = std::min(origin + period.reestimate_every - 1, period.last_origin());
        transfer::SubsequenceCache cache;
        const auto steps = prepare_step(engine, origin, cfg, cache);
        auto step_of = [&](std::size_t target, PredictorKind k) -> const StepData& {
            const auto pos = static_cast<std::size_t>(std::find(kinds.begin(), kinds.end(), k) - kinds.begin());
            return steps[target * nk + pos];
        };
        if (cfg.collect_audit) {
            for (std::size_t ti = 0; ti < engine.targets.size(); ++ti) {
                for (const auto& [k, eps] : audit_keys) {
                    auto rows = audit_rows(step_of(ti, k).ranked, eps, engine.targets[ti].date_of(origin));
                    auto& dst = audits[{ti, k, eps}];
                    dst.insert(dst.end(), rows.begin(), rows.end());
                }
            }
        }
        parallel_for(states.size(), cfg.threads, [&](std::size_t i) {
            const std::size_t ti = i / ns;
            const ModelSpec& spec = specs[i % ns];
            run_fit(engine.targets[ti], spec, ids[i % ns], step_of(ti, spec.kind), origin, block_end, period, cfg,
                    states[i]);
        });
    }

    for (const auto& t : engine.targets) {
        for (std::size_t o = period.first_origin(); o <= period.last_origin(); ++o) {
            ForecastRecord rec;
            rec.period = period.label;
            rec.asset = t.panel->id;
            rec.model = kNaiveModelId;
            rec.origin_day = o;
            rec.origin_date = t.date_of(o);
            rec.prediction = rec.forecast = t.panel->records[o - 1].rv_d;
            rec.actual = t.panel->records[o].rv_d;
            rec.fit_day = o;
            result.records.push_back(rec);
        }
    }
    for (auto& s : states) {
        result.records.insert(result.records.end(), s.records.begin(), s.records.end());
        result.fits.insert(result.fits.end(), s.fits.begin(), s.fits.end());
        if (s.snapshot) result.snapshots.push_back(std::move(*s.snapshot));
    }
    sort_by(result.records, [](const ForecastRecord& r) { return std::tie(r.asset, r.model, r.origin_day); });
    sort_by(result.fits, [](const FitSummary& f) { return std::tie(f.asset, f.model, f.origin_day); });
    sort_by(result.snapshots, [](const Snapshot& s) { return std::tie(s.asset, s.model); });
    for (auto& [key, rows] : audits) {
        const auto& [ti, k, eps] = key;
        result.audits.push_back({engine.targets[ti].panel->id, k, eps, std::move(rows)});
    }
    sort_by(result.audits, [](const SelectionAudit& a) { return std::make_tuple(a.asset, a.kind, a.epsilon); });
    return result;
}

std::vector<SelectionAudit> selection_audit(std::span<const AssetPanel> targets, std::span<const AssetPanel> sources,
                                            std::span<const PredictorKind> kinds, std::span<const double> epsilons,
                                            const SamplePeriod& period, const HarnessConfig& cfg) {
    const std::set<PredictorKind> kind_set(kinds.begin(), kinds.end());
    const std::vector<PredictorKind> kind_list(kind_set.begin(), kind_set.end());
    const Engine engine = prepare(targets, sources, kind_list, kind_set, kind_set, period);
    const std::size_t nk = kind_list.size();
    std::map<std::tuple<std::size_t, PredictorKind, double>, std::vector<transfer::AuditRow>> audits;
    for (std::size_t origin : reestimation_origins(period)) {
        transfer::SubsequenceCache cache;
        const auto steps = prepare_step(engine, origin, cfg, cache);
        for (std::size_t ti = 0; ti < engine.targets.size(); ++ti) {
            for (std::size_t ki = 0; ki < nk; ++ki) {
                for (double eps : epsilons) {
                    auto rows = audit_rows(steps[ti * nk + ki].ranked, eps, engine.targets[ti].date_of(origin));
                    auto& dst = audits[{ti, kind_list[ki], eps}];
                    dst.insert(dst.end(), rows.begin(), rows.end());
                }
            }
        }
    }
    std::vector<SelectionAudit> out;
    for (auto& [key, rows] : audits) {
        const auto& [ti, k, eps] = key;
        out.push_back({engine.targets[ti].panel->id, k, eps, std::move(rows)});
    }
    sort_by(out, [](const SelectionAudit& a) { return std::make_tuple(a.asset, a.kind, a.epsilon); });
    return out;
}

Strategy parse_strategy(std::string_view name) {
    if (name == "1-1-1") return Strategy::OneOneOne;
    if (name == "1-5-5") return Strategy::OneFiveFive;
    if (name == "1-5-22") return Strategy::OneFiveTwentyTwo;
    throw ConfigError("unknown transition strategy '" + std::string(name) + "'");
}

std::string_view to_string(Strategy s) {
    switch (s) {
        case Strategy::OneOneOne: return "1-1-1";
        case Strategy::OneFiveFive: return "1-5-5";
        case Strategy::OneFiveTwentyTwo: return "1-5-22";
    }
    return "?";
}

int transition_horizon(Strategy s, std::size_t day) {
    if (day == 0) throw ValidationError("trading days are counted from 1");
    switch (s) {
        case Strategy::OneOneOne: return 1;
        case Strategy::OneFiveFive: return day <= 5 ? 1 : 5;
        case Strategy::OneFiveTwentyTwo: return day <= 5 ? 1 : (day <= 22 ? 5 : 22);
    }
    throw ConfigError("unknown transition strategy");
}

std::vector<ForecastRecord> compose_strategy(Strategy s, std::span<const ForecastRecord> scarcity_records) {
    std::vector<ForecastRecord> out;
    for (const auto& r : scarcity_records) {
        if (r.model == kNaiveModelId) continue;
        const ModelSpec spec = ModelSpec::parse(r.model);
        if (spec.approach == Approach::TargetOnly) continue;
        if (data::horizon_of(spec.kind) != transition_horizon(s, r.origin_day + 1)) continue;
        ModelSpec base = spec;
        base.kind = data::with_horizon(spec.kind, 22);
        ForecastRecord c = r;
        c.period = std::string(to_string(s));
        c.model = std::string(to_string(s)) + " " + base.id();
        out.push_back(std::move(c));
    }
    sort_by(out, [](const ForecastRecord& r) { return std::tie(r.asset, r.model, r.origin_day); });
    return out;
}

}  // namespace volxfer::harness
