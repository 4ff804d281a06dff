#include "volxfer/data_pipeline.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

namespace volxfer::data {

namespace {

using namespace std::chrono;

bool inside_session(ExchangeTime t) {
    const auto since_midnight = t - floor<days>(t);
    return since_midnight >= minutes{kSessionOpenMinute} &&
           since_midnight <= minutes{kSessionCloseMinute};
}

Date next_weekday(Date d) {
    do {
        d += days{1};
    } while (!is_weekday(d));
    return d;
}

constexpr std::array kStd{Feature::RvD, Feature::RvW, Feature::RvM};
constexpr std::array kExt{Feature::RvD, Feature::RvW, Feature::RvM, Feature::Mom,
                          Feature::Dv,  Feature::Ea,  Feature::Us3m, Feature::Hsi,
                          Feature::Ads, Feature::Epu, Feature::Vix};
constexpr std::array kStd5{Feature::RvD, Feature::RvW};
constexpr std::array kExt5{Feature::RvD, Feature::RvW, Feature::Dv,  Feature::Ea, Feature::Us3m,
                           Feature::Hsi, Feature::Ads, Feature::Epu, Feature::Vix};
constexpr std::array kStd1{Feature::RvD};
constexpr std::array kExt1{Feature::RvD, Feature::Ea, Feature::Ads, Feature::Epu, Feature::Vix};

std::optional<double> feature_value(const DailyRecord& r, Feature f) {
    switch (f) {
        case Feature::RvD: return r.rv_d;
        case Feature::RvW: return r.rv_w;
        case Feature::RvM: return r.rv_m;
        case Feature::Mom: return r.mom;
        case Feature::Dv: return r.dv;
        case Feature::Ea: return static_cast<double>(r.ea);
        case Feature::Us3m: return r.us3m;
        case Feature::Hsi: return r.hsi;
        case Feature::Ads: return r.ads;
        case Feature::Epu: return r.epu;
        case Feature::Vix: return r.vix;
    }
    return std::nullopt;
}

}  // namespace

bool SessionCalendar::is_trading_day(Date d) const {
    if (!is_weekday(d) || holidays.contains(d)) return false;
    return include_half_days || !half_days.contains(d);
}

std::vector<IntradayBar> filter_sessions(std::span<const IntradayBar> bars,
                                         const SessionCalendar& calendar) {
    std::vector<IntradayBar> kept;
    for (std::size_t i = 0; i < bars.size(); ++i) {
        if (i > 0 && bars[i].timestamp <= bars[i - 1].timestamp) {
            throw ValidationError("intraday bars not strictly increasing at " +
                                  format_timestamp(bars[i].timestamp));
        }
        const IntradayBar& bar = bars[i];
        if (!(bar.close > 0.0)) continue;
        if (!inside_session(bar.timestamp)) continue;
        if (!calendar.is_trading_day(floor<days>(bar.timestamp))) continue;
        kept.push_back(bar);
    }
    return kept;
}

std::optional<double> compute_daily_rv(std::span<const IntradayBar> bars_of_day,
                                       int sampling_minutes) {
    if (sampling_minutes <= 0) throw ValidationError("sampling interval must be positive");
    if (bars_of_day.empty()) return std::nullopt;

    const Date day = floor<days>(bars_of_day.front().timestamp);
    std::vector<double> mark_closes;
    std::size_t next_bar = 0;
    std::optional<double> last_close;
    for (int mark = kSessionOpenMinute; mark <= kSessionCloseMinute; mark += sampling_minutes) {
        const ExchangeTime mark_time = day + minutes{mark};
        while (next_bar < bars_of_day.size() && bars_of_day[next_bar].timestamp <= mark_time) {
            last_close = bars_of_day[next_bar].close;
            ++next_bar;
        }
        if (last_close) mark_closes.push_back(*last_close);
    }
    if (mark_closes.size() < 2) return std::nullopt;

    double rv = 0.0;
    for (std::size_t k = 1; k < mark_closes.size(); ++k) {
        const double r = std::log(mark_closes[k]) - std::log(mark_closes[k - 1]);
        rv += r * r;
    }
    return rv;
}

std::vector<DailyObservation> daily_observations(std::span<const IntradayBar> bars,
                                                 const SessionCalendar& calendar,
                                                 int sampling_minutes) {
    const std::vector<IntradayBar> session = filter_sessions(bars, calendar);
    std::vector<DailyObservation> out;
    std::size_t begin = 0;
    while (begin < session.size()) {
        const Date day = floor<days>(session[begin].timestamp);
        std::size_t end = begin;
        double volume = 0.0;
        while (end < session.size() && floor<days>(session[end].timestamp) == day) {
            volume += session[end].volume;
            ++end;
        }
        const std::span<const IntradayBar> day_bars(session.data() + begin, end - begin);
        if (auto rv = compute_daily_rv(day_bars, sampling_minutes)) {
            out.push_back({day, *rv, day_bars.back().close, volume});
        }
        begin = end;
    }
    return out;
}

std::vector<VolatilityComponents> build_components(std::span<const double> rv_series) {
    std::vector<VolatilityComponents> out(rv_series.size());
    for (std::size_t t = 0; t < rv_series.size(); ++t) {
        // Sums are recomputed per window so stored means match a direct
        // recomputation exactly.
        if (t + 1 >= kWeekDays) {
            const double s = std::accumulate(rv_series.begin() + (t + 1 - kWeekDays),
                                             rv_series.begin() + (t + 1), 0.0);
            out[t].rv_w = s / static_cast<double>(kWeekDays);
        }
        if (t + 1 >= kMonthDays) {
            const double s = std::accumulate(rv_series.begin() + (t + 1 - kMonthDays),
                                             rv_series.begin() + (t + 1), 0.0);
            out[t].rv_m = s / static_cast<double>(kMonthDays);
        }
    }
    return out;
}

MacroSeries::MacroSeries(std::vector<std::pair<Date, double>> points) : points_(std::move(points)) {
    for (std::size_t i = 1; i < points_.size(); ++i) {
        if (points_[i].first <= points_[i - 1].first) {
            throw ValidationError("macro series dates not strictly increasing at " +
                                  format_date(points_[i].first));
        }
    }
}

std::optional<double> MacroSeries::value_at(Date d) const {
    auto it = std::upper_bound(points_.begin(), points_.end(), d,
                               [](Date lhs, const auto& p) { return lhs < p.first; });
    if (it == points_.begin()) return std::nullopt;
    return std::prev(it)->second;
}

std::vector<ExtendedPredictors> build_extended_predictors(
    std::span<const DailyObservation> days_in, const std::set<Date>& earnings,
    const MacroPanel& macro) {
    std::vector<ExtendedPredictors> out(days_in.size());
    for (std::size_t t = 0; t < days_in.size(); ++t) {
        ExtendedPredictors& e = out[t];
        const DailyObservation& today = days_in[t];
        if (t >= 5) {
            e.mom = std::log(today.close) - std::log(days_in[t - 5].close);
        }
        if (t >= 1) {
            const DailyObservation& prev = days_in[t - 1];
            if (today.volume > 0.0 && prev.volume > 0.0) {
                e.dv = std::log(today.close * today.volume) - std::log(prev.close * prev.volume);
            }
        }
        const Date next = (t + 1 < days_in.size()) ? days_in[t + 1].date : next_weekday(today.date);
        e.ea = earnings.contains(next) ? 1 : 0;

        if (t >= 1) {
            const Date prev_date = days_in[t - 1].date;
            const auto r1 = macro.us3m.value_at(today.date);
            const auto r0 = macro.us3m.value_at(prev_date);
            if (r1 && r0) e.us3m = *r1 - *r0;
            const auto h1 = macro.hsi.value_at(today.date);
            const auto h0 = macro.hsi.value_at(prev_date);
            if (h1 && h0 && *h1 > 0.0 && *h0 > 0.0) {
                const double r = std::log(*h1) - std::log(*h0);
                e.hsi = r * r;
            }
        }
        e.ads = macro.ads.value_at(today.date);
        e.epu = macro.epu.value_at(today.date);
        e.vix = macro.vix.value_at(today.date);
    }
    return out;
}

std::vector<DailyRecord> build_daily_records(std::span<const DailyObservation> days_in,
                                             const std::set<Date>& earnings,
                                             const MacroPanel& macro) {
    std::vector<double> rv(days_in.size());
    std::transform(days_in.begin(), days_in.end(), rv.begin(),
                   [](const DailyObservation& d) { return d.rv; });
    const auto components = build_components(rv);
    const auto extended = build_extended_predictors(days_in, earnings, macro);

    std::vector<DailyRecord> records(days_in.size());
    for (std::size_t t = 0; t < days_in.size(); ++t) {
        DailyRecord& r = records[t];
        r.date = days_in[t].date;
        r.rv_d = rv[t];
        r.rv_w = components[t].rv_w;
        r.rv_m = components[t].rv_m;
        r.mom = extended[t].mom;
        r.dv = extended[t].dv;
        r.ea = extended[t].ea;
        r.us3m = extended[t].us3m;
        r.hsi = extended[t].hsi;
        r.ads = extended[t].ads;
        r.epu = extended[t].epu;
        r.vix = extended[t].vix;
        if (t + 1 < days_in.size()) r.label = rv[t + 1];
        r.close = days_in[t].close;
        r.volume = days_in[t].volume;
    }
    return records;
}

PredictorKind parse_predictor_kind(std::string_view name) {
    if (name == "STD" || name == "STD-22") return PredictorKind::Std;
    if (name == "EXT" || name == "EXT-22") return PredictorKind::Ext;
    if (name == "STD-5") return PredictorKind::Std5;
    if (name == "EXT-5") return PredictorKind::Ext5;
    if (name == "STD-1") return PredictorKind::Std1;
    if (name == "EXT-1") return PredictorKind::Ext1;
    throw ConfigError("unknown predictor kind '" + std::string(name) + "'");
}

std::string_view to_string(PredictorKind kind) {
    switch (kind) {
        case PredictorKind::Std: return "STD";
        case PredictorKind::Ext: return "EXT";
        case PredictorKind::Std5: return "STD-5";
        case PredictorKind::Ext5: return "EXT-5";
        case PredictorKind::Std1: return "STD-1";
        case PredictorKind::Ext1: return "EXT-1";
    }
    return "?";
}

std::span<const Feature> feature_columns(PredictorKind kind) {
    switch (kind) {
        case PredictorKind::Std: return kStd;
        case PredictorKind::Ext: return kExt;
        case PredictorKind::Std5: return kStd5;
        case PredictorKind::Ext5: return kExt5;
        case PredictorKind::Std1: return kStd1;
        case PredictorKind::Ext1: return kExt1;
    }
    throw ConfigError("unknown predictor kind");
}

std::size_t feature_width(PredictorKind kind) { return feature_columns(kind).size(); }

std::size_t volatility_width(PredictorKind kind) {
    switch (horizon_of(kind)) {
        case 1: return 1;
        case 5: return 2;
        default: return 3;
    }
}

bool is_extended(PredictorKind kind) {
    return kind == PredictorKind::Ext || kind == PredictorKind::Ext5 || kind == PredictorKind::Ext1;
}

int horizon_of(PredictorKind kind) {
    switch (kind) {
        case PredictorKind::Std5:
        case PredictorKind::Ext5: return 5;
        case PredictorKind::Std1:
        case PredictorKind::Ext1: return 1;
        default: return 22;
    }
}

PredictorKind with_horizon(PredictorKind kind, int horizon) {
    const bool ext = is_extended(kind);
    switch (horizon) {
        case 1: return ext ? PredictorKind::Ext1 : PredictorKind::Std1;
        case 5: return ext ? PredictorKind::Ext5 : PredictorKind::Std5;
        case 22: return ext ? PredictorKind::Ext : PredictorKind::Std;
        default: throw ConfigError("unsupported predictor horizon " + std::to_string(horizon));
    }
}

std::optional<FeatureVector> extract_features(const DailyRecord& record, PredictorKind kind) {
    const auto columns = feature_columns(kind);
    FeatureVector x;
    x.reserve(columns.size());
    for (Feature f : columns) {
        const auto v = feature_value(record, f);
        if (!v || !std::isfinite(*v)) return std::nullopt;
        x.push_back(*v);
    }
    return x;
}

std::vector<FeatureRow> feature_rows(std::span<const DailyRecord> records, PredictorKind kind) {
    std::vector<FeatureRow> rows;
    for (std::size_t t = 0; t < records.size(); ++t) {
        if (auto x = extract_features(records[t], kind)) {
            rows.push_back({t + 1, records[t].date, std::move(*x), records[t].label});
        }
    }
    return rows;
}

SupervisedDataSet assemble(std::span<const DailyRecord> records, PredictorKind kind,
                           const std::string& asset_id) {
    SupervisedDataSet out;
    out.kind = kind;
    for (std::size_t t = 0; t + 1 < records.size(); ++t) {
        const DailyRecord& r = records[t];
        if (!r.label || !std::isfinite(*r.label) || *r.label < 0.0) continue;
        auto x = extract_features(r, kind);
        if (!x) continue;
        out.rows.push_back({std::move(*x), *r.label, asset_id, r.date, records[t + 1].date});
    }
    return out;
}

SupervisedDataSet truncate_to(const SupervisedDataSet& data, Date cutoff) {
    SupervisedDataSet out;
    out.kind = data.kind;
    for (const LabeledRow& row : data.rows) {
        if (row.label_date <= cutoff) out.rows.push_back(row);
    }
    return out;
}

}  // namespace volxfer::data
