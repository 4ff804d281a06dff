#include "volxfer/report.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "volxfer/evaluation.h"
#include "volxfer/rng.h"

namespace volxfer::report {

using harness::ForecastRecord;

namespace {

std::string cell(double v) { return std::isfinite(v) ? format_double(v) : std::string(); }

double parse_cell(const std::string& s, const std::string& where) {
    if (s.empty()) return std::numeric_limits<double>::quiet_NaN();
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used == s.size()) return v;
    } catch (const std::exception&) {
    }
    throw ValidationError(where + ": malformed number '" + s + "'");
}

std::size_t parse_count(const std::string& s, const std::string& where) {
    try {
        std::size_t used = 0;
        const unsigned long long v = std::stoull(s, &used);
        if (used == s.size()) return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
    }
    throw ValidationError(where + ": malformed count '" + s + "'");
}

bool parse_flag(const std::string& s, const std::string& where) {
    if (s == "0") return false;
    if (s == "1") return true;
    throw ValidationError(where + ": expected 0 or 1, got '" + s + "'");
}

// Records of one group indexed as asset -> model -> origin day.
using GroupIndex = std::map<std::string, std::map<std::string, std::map<std::size_t, const ForecastRecord*>>>;

GroupIndex index_group(const std::vector<ForecastRecord>& records) {
    GroupIndex idx;
    for (const auto& r : records) idx[r.asset][r.model][r.origin_day] = &r;
    return idx;
}

struct AssetMetric {
    double mse = 0.0;
    double mae = 0.0;
    bool defined = false;
};

AssetMetric metric_of(const std::map<std::size_t, const ForecastRecord*>& by_origin) {
    std::vector<double> f, a;
    for (const auto& [o, r] : by_origin) {
        if (r->failed) continue;
        f.push_back(r->forecast);
        a.push_back(r->actual);
    }
    if (f.empty()) return {};
    const auto l = eval::compute_losses(f, a);
    return {l.mse, l.mae, true};
}

std::vector<std::string> group_order(const ReportConfig& cfg) {
    std::vector<std::string> order = cfg.standard_periods;
    if (!cfg.standard_periods.empty()) order.push_back(harness::kAllStandardLabel);
    order.insert(order.end(), cfg.scarcity_periods.begin(), cfg.scarcity_periods.end());
    for (auto s : cfg.strategies) order.emplace_back(harness::to_string(s));
    return order;
}

std::vector<std::string> models_in(const GroupIndex& idx) {
    std::set<std::string> models;
    for (const auto& [asset, per_model] : idx) {
        for (const auto& [m, _] : per_model) models.insert(m);
    }
    return {models.begin(), models.end()};
}

enum class Metric { Mse, Mae };

double loss_of(const ForecastRecord& r, Metric m) {
    const double e = r.forecast - r.actual;
    return m == Metric::Mse ? e * e : std::abs(e);
}

std::string relative_table(const std::vector<std::string>& order,
                           const std::map<std::string, GroupIndex>& groups, Metric metric) {
    std::ostringstream out;
    out << "period,model,reference,mean_ratio,assets,dm_rejections,dm_tested,dm_majority\n";
    for (const auto& g : order) {
        const auto it = groups.find(g);
        if (it == groups.end()) continue;
        const GroupIndex& idx = it->second;
        const auto models = models_in(idx);
        std::map<std::string, std::map<std::string, AssetMetric>> metrics;  // asset -> model
        for (const auto& [asset, per_model] : idx) {
            for (const auto& [m, by_origin] : per_model) metrics[asset][m] = metric_of(by_origin);
        }
        for (const auto& a : models) {
            for (const auto& b : models) {
                if (a == b) continue;
                double ratio_sum = 0.0;
                std::size_t assets = 0, tested = 0, rejections = 0;
                for (const auto& [asset, per_model] : idx) {
                    const auto ia = per_model.find(a);
                    const auto ib = per_model.find(b);
                    if (ia == per_model.end() || ib == per_model.end()) continue;
                    const AssetMetric& ma = metrics[asset][a];
                    const AssetMetric& mb = metrics[asset][b];
                    if (!ma.defined || !mb.defined) continue;
                    const double va = metric == Metric::Mse ? ma.mse : ma.mae;
                    const double vb = metric == Metric::Mse ? mb.mse : mb.mae;
                    if (vb > 0.0) {
                        ratio_sum += va / vb;
                        ++assets;
                    }
                    std::vector<double> la, lb;
                    for (const auto& [o, ra] : ia->second) {
                        const auto rb = ib->second.find(o);
                        if (ra->failed || rb == ib->second.end() || rb->second->failed) continue;
                        la.push_back(loss_of(*ra, metric));
                        lb.push_back(loss_of(*rb->second, metric));
                    }
                    if (la.size() < eval::kDmMinLength) continue;
                    ++tested;
                    if (eval::dm_test(la, lb).reject) ++rejections;
                }
                if (assets == 0 && tested == 0) continue;
                out << g << ',' << a << ',' << b << ','
                    << (assets > 0 ? format_double(ratio_sum / static_cast<double>(assets)) : std::string()) << ','
                    << assets << ',' << rejections << ',' << tested << ',' << (2 * rejections > tested && tested > 0 ? 1 : 0)
                    << '\n';
            }
        }
    }
    return out.str();
}

struct NfRelative {
    std::string group;
    std::string model;
    double rel_mse = 0.0;
    double rel_mae = 0.0;
    std::size_t assets = 0;
};

std::vector<NfRelative> nf_relative(const std::vector<std::string>& order,
                                    const std::map<std::string, GroupIndex>& groups) {
    std::vector<NfRelative> rows;
    for (const auto& g : order) {
        const auto it = groups.find(g);
        if (it == groups.end()) continue;
        const GroupIndex& idx = it->second;
        for (const auto& model : models_in(idx)) {
            if (model == harness::kNaiveModelId) continue;
            NfRelative row{g, model};
            for (const auto& [asset, per_model] : idx) {
                const auto im = per_model.find(model);
                const auto inf = per_model.find(harness::kNaiveModelId);
                if (im == per_model.end() || inf == per_model.end()) continue;
                const auto mm = metric_of(im->second);
                const auto mn = metric_of(inf->second);
                if (!mm.defined || !mn.defined || !(mn.mse > 0.0) || !(mn.mae > 0.0)) continue;
                row.rel_mse += mm.mse / mn.mse;
                row.rel_mae += mm.mae / mn.mae;
                ++row.assets;
            }
            if (row.assets == 0) continue;
            row.rel_mse /= static_cast<double>(row.assets);
            row.rel_mae /= static_cast<double>(row.assets);
            rows.push_back(row);
        }
    }
    return rows;
}

struct McsMembership {
    std::string group;
    std::string metric;
    std::string asset;
    std::string model;
    bool included = false;
};

std::vector<McsMembership> mcs_memberships(const std::vector<std::string>& order,
                                           const std::map<std::string, GroupIndex>& groups,
                                           const ReportConfig& cfg) {
    std::vector<McsMembership> rows;
    for (const auto& g : order) {
        const auto it = groups.find(g);
        if (it == groups.end()) continue;
        for (const auto& [asset, per_model] : it->second) {
            std::vector<std::string> models;
            for (const auto& [m, _] : per_model) models.push_back(m);
            if (models.size() < 2) continue;
            // Origins at which every model produced a forecast.
            std::vector<std::size_t> common;
            for (const auto& [o, r] : per_model.begin()->second) {
                bool all = true;
                for (const auto& [m, by_origin] : per_model) {
                    const auto f = by_origin.find(o);
                    if (f == by_origin.end() || f->second->failed) {
                        all = false;
                        break;
                    }
                }
                if (all) common.push_back(o);
            }
            if (common.size() < eval::kMcsMinLength) continue;
            for (Metric metric : {Metric::Mse, Metric::Mae}) {
                const std::string metric_name = metric == Metric::Mse ? "MSE" : "MAE";
                eval::LossMatrix losses;
                for (std::size_t o : common) {
                    std::vector<double> row;
                    for (const auto& [m, by_origin] : per_model) row.push_back(loss_of(*by_origin.at(o), metric));
                    losses.push_back(std::move(row));
                }
                eval::McsConfig mc{cfg.mcs_alpha, cfg.mcs_bootstrap,
                                   derive_seed(cfg.seed, "mcs/" + g + "/" + metric_name + "/" + asset)};
                const auto result = eval::model_confidence_set(losses, mc);
                const std::set<std::size_t> alive(result.survivors.begin(), result.survivors.end());
                for (std::size_t k = 0; k < models.size(); ++k) {
                    rows.push_back({g, metric_name, asset, models[k], alive.contains(k)});
                }
            }
        }
    }
    return rows;
}

}  // namespace

std::string records_csv(std::span<const ForecastRecord> records) {
    std::ostringstream out;
    out << kRecordHeader << '\n';
    for (const auto& r : records) {
        out << r.period << ',' << r.asset << ',' << r.model << ',' << r.origin_day << ',' << format_date(r.origin_date)
            << ',' << cell(r.forecast) << ',' << cell(r.prediction) << ',' << cell(r.actual) << ','
            << (r.clamped ? 1 : 0) << ',' << (r.failed ? 1 : 0) << ',' << r.fit_day << ',' << r.train_rows << '\n';
    }
    return out.str();
}

std::vector<ForecastRecord> parse_records_csv(const std::string& text, const std::string& origin_name) {
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    std::vector<ForecastRecord> out;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line_no == 1) {
            if (line != kRecordHeader) throw ValidationError(origin_name + ":1: unexpected forecast record header");
            continue;
        }
        if (line.empty()) continue;
        const std::string where = origin_name + ":" + std::to_string(line_no);
        const auto f = split(line, ',');
        if (f.size() != 12) throw ValidationError(where + ": expected 12 fields, got " + std::to_string(f.size()));
        ForecastRecord r;
        r.period = f[0];
        r.asset = f[1];
        r.model = f[2];
        r.origin_day = parse_count(f[3], where);
        try {
            r.origin_date = parse_date(f[4]);
        } catch (const ValidationError& e) {
            throw ValidationError(where + ": " + e.what());
        }
        r.forecast = parse_cell(f[5], where);
        r.prediction = parse_cell(f[6], where);
        r.actual = parse_cell(f[7], where);
        r.clamped = parse_flag(f[8], where);
        r.failed = parse_flag(f[9], where);
        r.fit_day = parse_count(f[10], where);
        r.train_rows = parse_count(f[11], where);
        out.push_back(std::move(r));
    }
    if (line_no == 0) throw ValidationError(origin_name + ": empty forecast record file");
    return out;
}

std::vector<ForecastRecord> read_records_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_records_csv(buf.str(), path.string());
}

std::string forecasts_csv(std::span<const ForecastRecord> records) {
    std::vector<const ForecastRecord*> ok;
    for (const auto& r : records) {
        if (!r.failed) ok.push_back(&r);
    }
    std::stable_sort(ok.begin(), ok.end(), [](const ForecastRecord* a, const ForecastRecord* b) {
        return std::tie(a->asset, a->model, a->origin_date) < std::tie(b->asset, b->model, b->origin_date);
    });
    std::ostringstream out;
    out << kForecastHeader << '\n';
    for (const auto* r : ok) {
        out << r->asset << ',' << r->model << ',' << format_date(r->origin_date) << ',' << format_double(r->forecast)
            << ',' << format_double(r->actual) << '\n';
    }
    return out.str();
}

std::string fits_csv(std::span<const harness::FitSummary> fits) {
    std::ostringstream out;
    out << kFitHeader << '\n';
    for (const auto& f : fits) {
        std::string msg = f.message;
        std::replace(msg.begin(), msg.end(), ',', ';');
        std::replace(msg.begin(), msg.end(), '\n', ' ');
        out << f.period << ',' << f.asset << ',' << f.model << ',' << f.origin_day << ',' << f.rows << ','
            << f.epochs << ',' << (f.failed ? 1 : 0) << ',' << msg << '\n';
    }
    return out.str();
}

std::string audit_csv(const harness::SelectionAudit& audit) {
    std::ostringstream out;
    out << transfer::kAuditHeader << '\n';
    for (const auto& r : audit.rows) {
        out << format_date(r.origin) << ',' << r.asset_id << ',' << r.start_index << ',' << format_double(r.distance)
            << ',' << (r.selected ? 1 : 0) << '\n';
    }
    return out.str();
}

std::vector<MetricRow> compute_metrics(std::span<const ForecastRecord> records) {
    std::map<std::tuple<std::string, std::string, std::string>, std::vector<const ForecastRecord*>> groups;
    for (const auto& r : records) groups[{r.period, r.asset, r.model}].push_back(&r);
    std::vector<MetricRow> rows;
    for (const auto& [key, recs] : groups) {
        MetricRow row{std::get<0>(key), std::get<1>(key), std::get<2>(key)};
        std::vector<double> f, a;
        for (const auto* r : recs) {
            if (r->failed) {
                ++row.failures;
                continue;
            }
            f.push_back(r->forecast);
            a.push_back(r->actual);
        }
        if (f.empty()) continue;
        const auto l = eval::compute_losses(f, a);
        row.n = f.size();
        row.mse = l.mse;
        row.mae = l.mae;
        rows.push_back(std::move(row));
    }
    return rows;
}

std::map<std::string, std::vector<ForecastRecord>> evaluation_groups(std::span<const ForecastRecord> records,
                                                                     const ReportConfig& cfg) {
    std::map<std::string, std::vector<ForecastRecord>> groups;
    const std::set<std::string> standard(cfg.standard_periods.begin(), cfg.standard_periods.end());
    const std::set<std::string> scarcity(cfg.scarcity_periods.begin(), cfg.scarcity_periods.end());
    std::vector<ForecastRecord> scarce;
    std::set<std::tuple<std::string, std::string, std::size_t>> seen;
    for (const auto& r : records) {
        if (standard.contains(r.period) || scarcity.contains(r.period)) groups[r.period].push_back(r);
        if (standard.contains(r.period) && seen.emplace(r.asset, r.model, r.origin_day).second) {
            ForecastRecord all = r;
            all.period = harness::kAllStandardLabel;
            groups[harness::kAllStandardLabel].push_back(std::move(all));
        }
        if (scarcity.contains(r.period)) scarce.push_back(r);
    }
    for (auto s : cfg.strategies) {
        const std::string label(harness::to_string(s));
        auto composed = harness::compose_strategy(s, scarce);
        for (const auto& r : scarce) {
            if (r.model != harness::kNaiveModelId) continue;
            ForecastRecord nf = r;
            nf.period = label;
            composed.push_back(std::move(nf));
        }
        if (!composed.empty()) groups[label] = std::move(composed);
    }
    for (auto& [g, recs] : groups) {
        std::stable_sort(recs.begin(), recs.end(), [](const ForecastRecord& a, const ForecastRecord& b) {
            return std::tie(a.asset, a.model, a.origin_day) < std::tie(b.asset, b.model, b.origin_day);
        });
    }
    return groups;
}

std::map<std::string, std::string> build_reports(std::span<const ForecastRecord> records, const ReportConfig& cfg) {
    const auto groups = evaluation_groups(records, cfg);
    const auto order = group_order(cfg);
    std::map<std::string, GroupIndex> indexed;
    for (const auto& [g, recs] : groups) indexed[g] = index_group(recs);

    std::map<std::string, std::string> files;

    std::ostringstream metrics;
    metrics << "period,asset,model,n,failures,mse,mae\n";
    for (const auto& g : order) {
        const auto it = groups.find(g);
        if (it == groups.end()) continue;
        for (const auto& row : compute_metrics(it->second)) {
            metrics << row.period << ',' << row.asset << ',' << row.model << ',' << row.n << ',' << row.failures << ','
                    << format_double(row.mse) << ',' << format_double(row.mae) << '\n';
        }
    }
    files["metrics.csv"] = metrics.str();
    files["relative_mse.csv"] = relative_table(order, indexed, Metric::Mse);
    files["relative_mae.csv"] = relative_table(order, indexed, Metric::Mae);

    const auto rel = nf_relative(order, indexed);
    std::set<std::string> strategy_labels;
    for (auto s : cfg.strategies) strategy_labels.emplace(harness::to_string(s));
    std::ostringstream nf, transition;
    nf << "period,model,rel_mse,rel_mae,assets\n";
    transition << "strategy,model,rel_mse,rel_mae,assets\n";
    for (const auto& row : rel) {
        const std::string line = row.model + ',' + format_double(row.rel_mse) + ',' + format_double(row.rel_mae) +
                                 ',' + std::to_string(row.assets) + '\n';
        (strategy_labels.contains(row.group) ? transition : nf) << row.group << ',' << line;
    }
    files["nf_relative.csv"] = nf.str();
    files["transition.csv"] = transition.str();

    const auto mcs = mcs_memberships(order, indexed, cfg);
    std::ostringstream members;
    members << "period,metric,asset,model,included\n";
    // (period, metric, model) -> count, in group order
    std::vector<std::tuple<std::string, std::string, std::string>> keys;
    std::map<std::tuple<std::string, std::string, std::string>, std::size_t> counts;
    const std::set<std::string> standard(cfg.standard_periods.begin(), cfg.standard_periods.end());
    auto bump = [&](const std::string& g, const std::string& metric, const std::string& model, bool in) {
        auto key = std::make_tuple(g, metric, model);
        auto [it, inserted] = counts.emplace(key, 0);
        if (inserted) keys.push_back(key);
        if (in) ++it->second;
    };
    for (const auto& m : mcs) {
        members << m.group << ',' << m.metric << ',' << m.asset << ',' << m.model << ',' << (m.included ? 1 : 0) << '\n';
        bump(m.group, m.metric, m.model, m.included);
    }
    for (const auto& m : mcs) {
        if (standard.contains(m.group)) bump("agg", m.metric, m.model, m.included);
    }
    files["mcs.csv"] = members.str();
    std::ostringstream mcs_counts;
    mcs_counts << "period,metric,model,count\n";
    for (const auto& key : keys) {
        mcs_counts << std::get<0>(key) << ',' << std::get<1>(key) << ',' << std::get<2>(key) << ',' << counts[key]
                   << '\n';
    }
    files["mcs_counts.csv"] = mcs_counts.str();

    std::vector<ForecastRecord> raw;
    for (const auto& r : records) raw.push_back(r);
    files["forecasts.csv"] = forecasts_csv(raw);
    return files;
}

std::string summary_table(std::span<const ForecastRecord> records, const ReportConfig& cfg) {
    const auto groups = evaluation_groups(records, cfg);
    std::map<std::string, GroupIndex> indexed;
    for (const auto& [g, recs] : groups) indexed[g] = index_group(recs);
    auto rel = nf_relative(group_order(cfg), indexed);
    std::string out = fmt::format("{:<8} {:<28} {:>10} {:>10} {:>6}\n", "period", "best models vs NF", "rel_mse",
                                  "rel_mae", "assets");
    std::map<std::string, std::vector<NfRelative>> by_group;
    std::vector<std::string> order;
    for (const auto& r : rel) {
        if (!by_group.contains(r.group)) order.push_back(r.group);
        by_group[r.group].push_back(r);
    }
    for (const auto& g : order) {
        auto& rows = by_group[g];
        std::stable_sort(rows.begin(), rows.end(), [](const NfRelative& a, const NfRelative& b) {
            return std::tie(a.rel_mse, a.model) < std::tie(b.rel_mse, b.model);
        });
        for (std::size_t i = 0; i < std::min<std::size_t>(3, rows.size()); ++i) {
            out += fmt::format("{:<8} {:<28} {:>10.4f} {:>10.4f} {:>6}\n", g, rows[i].model, rows[i].rel_mse,
                               rows[i].rel_mae, rows[i].assets);
        }
    }
    return out;
}

}  // namespace volxfer::report
