#include "volxfer/runner.h"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "volxfer/csv_io.h"
#include "volxfer/rng.h"

namespace volxfer::runner {

namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string file_safe(std::string s) {
    for (char& c : s) {
        if (c == ' ' || c == '/' || c == '*') c = '_';
    }
    return s;
}

harness::AssetPanel load_asset(const config::AssetSource& asset, const config::ExperimentConfig& cfg,
                               const data::MacroPanel& macro,
                               const std::map<std::string, std::set<Date>>& earnings) {
    const auto bars = io::read_intraday_csv(asset.path);
    std::vector<data::DailyObservation> days;
    try {
        days = data::daily_observations(bars, cfg.calendar, cfg.sampling_minutes);
    } catch (const ValidationError& e) {
        throw ValidationError(asset.path.string() + ": " + e.what());
    }
    if (asset.listing_date) {
        std::erase_if(days, [&](const data::DailyObservation& d) { return d.date < *asset.listing_date; });
    }
    if (days.empty()) throw ValidationError(asset.path.string() + ": no usable trading days");
    static const std::set<Date> none;
    const auto it = earnings.find(asset.id);
    return {asset.id, data::build_daily_records(days, it == earnings.end() ? none : it->second, macro)};
}

void write_text(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path());
    io::write_file_atomic(path, content);
}

std::string period_digest(const Dataset& ds, const harness::SamplePeriod& p) {
    return fmt::format("{:016x}", fnv1a(p.label + "/" + std::to_string(p.eval_len), ds.digest));
}

void write_period_outputs(const fs::path& out, const harness::PeriodResult& r) {
    const std::string& label = r.period.label;
    write_text(out / "fits" / ("fits_" + label + ".csv"), report::fits_csv(r.fits));
    for (const auto& a : r.audits) {
        const std::string name = fmt::format("{}_{}_MTL-{}.csv", a.asset, data::to_string(a.kind), format_double(a.epsilon));
        write_text(out / "selection" / label / name, report::audit_csv(a));
    }
    for (const auto& s : r.snapshots) {
        nlohmann::json j{{"period", s.period}, {"asset", s.asset}, {"model", s.model},
                         {"origin_day", s.origin_day}, {"regressor", s.model_json}};
        write_text(out / "models" / label / s.asset / (file_safe(s.model) + ".json"), j.dump(1) + "\n");
    }
}

void write_reports(const fs::path& out, const std::vector<harness::ForecastRecord>& records,
                   const config::ExperimentConfig& cfg) {
    const auto files = report::build_reports(records, report_config(cfg));
    for (const auto& [name, content] : files) write_text(out / "reports" / name, content);
    std::cout << report::summary_table(records, report_config(cfg));
}

}  // namespace

config::ExperimentConfig resolve_config(const RunOptions& opts) {
    auto cfg = config::load_config(opts.config);
    if (opts.threads) {
        if (*opts.threads == 0) throw ConfigError("--threads must be positive");
        cfg.threads = *opts.threads;
    }
    if (opts.seed) {
        cfg.seed = *opts.seed;
        cfg.fingerprint += ";seed_override=" + std::to_string(*opts.seed);
    }
    if (opts.out) cfg.output_dir = *opts.out;
    return cfg;
}

Dataset load_dataset(const config::ExperimentConfig& cfg) {
    data::MacroPanel macro{io::read_macro_csv(cfg.macro.us3m), io::read_macro_csv(cfg.macro.hsi),
                           io::read_macro_csv(cfg.macro.ads), io::read_macro_csv(cfg.macro.epu),
                           io::read_macro_csv(cfg.macro.vix)};
    std::map<std::string, std::set<Date>> earnings;
    if (cfg.earnings) earnings = io::read_earnings_csv(*cfg.earnings);

    Dataset ds;
    ds.digest = fnv1a(cfg.fingerprint);
    for (const auto& t : cfg.targets) ds.targets.push_back(load_asset(t, cfg, macro, earnings));
    for (const auto& s : cfg.sources) ds.sources.push_back(load_asset(s, cfg, macro, earnings));
    for (const auto* list : {&ds.targets, &ds.sources}) {
        for (const auto& panel : *list) {
            std::ostringstream text;
            io::write_daily_records(text, panel.records);
            ds.digest = fnv1a(panel.id + "\n" + text.str(), ds.digest);
        }
    }
    return ds;
}

harness::HarnessConfig harness_config(const config::ExperimentConfig& cfg) {
    harness::HarnessConfig h;
    h.seed = cfg.seed;
    h.threads = cfg.threads;
    h.subsequence_length = cfg.subsequence_length;
    h.fit = cfg.fit;
    return h;
}

report::ReportConfig report_config(const config::ExperimentConfig& cfg) {
    report::ReportConfig r;
    for (const auto& p : cfg.sample_periods()) (p.scarcity ? r.scarcity_periods : r.standard_periods).push_back(p.label);
    r.strategies = cfg.strategies;
    r.mcs_alpha = cfg.mcs_alpha;
    r.mcs_bootstrap = cfg.mcs_bootstrap;
    r.seed = cfg.seed;
    return r;
}

std::vector<harness::ModelSpec> specs_for(const config::ExperimentConfig& cfg, const harness::SamplePeriod& period) {
    return harness::expand_specs(cfg.modes, cfg.epsilons, cfg.families, cfg.predictor_sets, period);
}

std::vector<harness::SamplePeriod> selected_periods(const config::ExperimentConfig& cfg,
                                                    const std::optional<std::string>& label) {
    auto periods = cfg.sample_periods();
    if (!label) return periods;
    std::vector<harness::SamplePeriod> out;
    for (const auto& p : periods) {
        if (p.label == *label) out.push_back(p);
    }
    if (out.empty()) throw ConfigError("--period '" + *label + "' is not a configured sample period");
    return out;
}

int ingest(const RunOptions& opts) {
    const auto cfg = resolve_config(opts);
    const auto ds = load_dataset(cfg);
    for (const auto* list : {&ds.targets, &ds.sources}) {
        for (const auto& panel : *list) {
            fs::create_directories(cfg.output_dir / "daily");
            io::write_daily_records(cfg.output_dir / "daily" / (panel.id + ".csv"), panel.records);
            spdlog::info("{}: {} trading days", panel.id, panel.records.size());
        }
    }
    return 0;
}

int select(const RunOptions& opts) {
    const auto cfg = resolve_config(opts);
    const auto ds = load_dataset(cfg);
    auto hc = harness_config(cfg);
    std::size_t total = 0;
    for (const auto& period : selected_periods(cfg, opts.period)) {
        std::vector<data::PredictorKind> kinds;
        for (const auto& s : specs_for(cfg, period)) {
            if (s.approach == transfer::Approach::MultiSource &&
                std::find(kinds.begin(), kinds.end(), s.kind) == kinds.end()) {
                kinds.push_back(s.kind);
            }
        }
        if (kinds.empty()) continue;
        const auto audits = harness::selection_audit(ds.targets, ds.sources, kinds, cfg.epsilons, period, hc);
        for (const auto& a : audits) {
            const std::string name =
                fmt::format("{}_{}_MTL-{}.csv", a.asset, data::to_string(a.kind), format_double(a.epsilon));
            write_text(cfg.output_dir / "selection" / period.label / name, report::audit_csv(a));
            total += a.rows.size();
        }
        spdlog::info("period {}: {} selection audit files", period.label, audits.size());
    }
    spdlog::info("{} audit rows written", total);
    return 0;
}

int forecast(const RunOptions& opts) {
    const auto cfg = resolve_config(opts);
    const auto ds = load_dataset(cfg);
    auto hc = harness_config(cfg);
    hc.collect_audit = true;
    hc.collect_snapshots = true;

    std::vector<harness::ForecastRecord> all;
    for (const auto& period : selected_periods(cfg, opts.period)) {
        const fs::path cache = cfg.output_dir / "cache" / ("records_" + period.label + ".csv");
        const fs::path marker = cfg.output_dir / "cache" / ("records_" + period.label + ".digest");
        const std::string digest = period_digest(ds, period);
        if (fs::exists(cache) && fs::exists(marker) && slurp(marker) == digest + "\n") {
            auto cached = report::read_records_csv(cache);
            spdlog::info("period {}: reusing {} cached records", period.label, cached.size());
            all.insert(all.end(), cached.begin(), cached.end());
            continue;
        }
        const auto specs = specs_for(cfg, period);
        spdlog::info("period {}: {} models, {} fits per model and target", period.label, specs.size(),
                     period.fit_count());
        const auto result = harness::rolling_evaluate(ds.targets, ds.sources, specs, period, hc);
        for (const auto& id : result.skipped_assets) {
            spdlog::warn("period {}: target {} has too few trading days (needs {})", period.label, id,
                         period.required_days());
        }
        std::size_t failures = 0;
        for (const auto& f : result.fits) {
            if (!f.failed) continue;
            ++failures;
            spdlog::debug("fit failed: period {} {} {} origin {}: {}", f.period, f.asset, f.model, f.origin_day,
                          f.message);
        }
        if (failures > 0) spdlog::info("period {}: {} fits failed and their records are flagged", period.label, failures);
        write_period_outputs(cfg.output_dir, result);
        write_text(cache, report::records_csv(result.records));
        write_text(marker, digest + "\n");
        all.insert(all.end(), result.records.begin(), result.records.end());
    }
    write_reports(cfg.output_dir, all, cfg);
    return 0;
}

int report(const RunOptions& opts) {
    const auto cfg = resolve_config(opts);
    std::vector<harness::ForecastRecord> all;
    for (const auto& period : selected_periods(cfg, opts.period)) {
        const fs::path cache = cfg.output_dir / "cache" / ("records_" + period.label + ".csv");
        if (!fs::exists(cache)) {
            spdlog::warn("period {}: no cached records at {}", period.label, cache.string());
            continue;
        }
        auto records = report::read_records_csv(cache);
        all.insert(all.end(), records.begin(), records.end());
    }
    if (all.empty()) {
        spdlog::error("no cached forecast records under {}; run 'forecast' first", cfg.output_dir.string());
        return 1;
    }
    write_reports(cfg.output_dir, all, cfg);
    return 0;
}

int synth(const fs::path& out, const synth::PanelSpec& spec) {
    synth::write_fixture(out, spec);
    spdlog::info("synthetic panel written to {}", out.string());
    return 0;
}

}  // namespace volxfer::runner
