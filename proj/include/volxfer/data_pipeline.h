#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "volxfer/common.h"

namespace volxfer::data {

struct IntradayBar {
    ExchangeTime timestamp;
    double close = 0.0;
    double volume = 0.0;
};

// Trading calendar beyond the Monday-Friday rule.
struct SessionCalendar {
    std::set<Date> holidays;
    std::set<Date> half_days;
    bool include_half_days = false;

    bool is_trading_day(Date d) const;
};

inline constexpr int kSessionOpenMinute = 9 * 60 + 30;
inline constexpr int kSessionCloseMinute = 16 * 60;

// Keeps bars stamped inside [9:30, 16:00] exchange time on trading days and
// with a positive close. Throws ValidationError unless timestamps are
// strictly increasing.
std::vector<IntradayBar> filter_sessions(std::span<const IntradayBar> bars,
                                         const SessionCalendar& calendar = {});

// Realized variance of one session: the sum of squared log returns between
// consecutive sampling marks (9:30, 9:35, ..., 16:00 for 5 minutes). Each mark
// takes the close of the last bar at or before it; marks before the first bar
// of the day are skipped. Returns nullopt when fewer than 2 marks are usable.
std::optional<double> compute_daily_rv(std::span<const IntradayBar> bars_of_day,
                                       int sampling_minutes = 5);

// One usable trading day after session filtering.
struct DailyObservation {
    Date date;
    double rv = 0.0;
    double close = 0.0;   // last session close
    double volume = 0.0;  // summed session volume
};

std::vector<DailyObservation> daily_observations(std::span<const IntradayBar> bars,
                                                 const SessionCalendar& calendar = {},
                                                 int sampling_minutes = 5);

struct VolatilityComponents {
    std::optional<double> rv_w;
    std::optional<double> rv_m;
};

inline constexpr std::size_t kWeekDays = 5;
inline constexpr std::size_t kMonthDays = 22;

// Trailing 5- and 22-day means of rv_d, current day included.
std::vector<VolatilityComponents> build_components(std::span<const double> rv_series);

// A macro series indexed by calendar date, read with forward fill.
class MacroSeries {
public:
    MacroSeries() = default;
    explicit MacroSeries(std::vector<std::pair<Date, double>> points);

    // Most recent value dated on or before d; nullopt if d precedes the series.
    std::optional<double> value_at(Date d) const;
    bool empty() const { return points_.empty(); }

private:
    std::vector<std::pair<Date, double>> points_;
};

struct MacroPanel {
    MacroSeries us3m;  // 3-month T-bill rate level
    MacroSeries hsi;   // Hang Seng index level
    MacroSeries ads;
    MacroSeries epu;
    MacroSeries vix;
};

struct ExtendedPredictors {
    std::optional<double> mom;
    std::optional<double> dv;
    int ea = 0;
    std::optional<double> us3m;
    std::optional<double> hsi;
    std::optional<double> ads;
    std::optional<double> epu;
    std::optional<double> vix;
};

// Per-day firm and macro predictors. `earnings` holds the announcement dates
// of this asset; ea(t) looks at the next trading day of the series (the next
// weekday for the final day). us3m and hsi are differenced over consecutive
// trading days of the asset after forward-filling the levels.
std::vector<ExtendedPredictors> build_extended_predictors(
    std::span<const DailyObservation> days, const std::set<Date>& earnings,
    const MacroPanel& macro);

struct DailyRecord {
    Date date;
    double rv_d = 0.0;
    std::optional<double> rv_w;
    std::optional<double> rv_m;
    std::optional<double> mom;
    std::optional<double> dv;
    int ea = 0;
    std::optional<double> us3m;
    std::optional<double> hsi;
    std::optional<double> ads;
    std::optional<double> epu;
    std::optional<double> vix;
    std::optional<double> label;  // rv_d of the next trading day
    double close = 0.0;
    double volume = 0.0;
};

std::vector<DailyRecord> build_daily_records(std::span<const DailyObservation> days,
                                             const std::set<Date>& earnings,
                                             const MacroPanel& macro);

enum class Feature { RvD, RvW, RvM, Mom, Dv, Ea, Us3m, Hsi, Ads, Epu, Vix };

// Full sets (22-day horizon) and the reduced "-5" / "-1" sets used right
// after listing.
enum class PredictorKind { Std, Ext, Std5, Ext5, Std1, Ext1 };

PredictorKind parse_predictor_kind(std::string_view name);
std::string_view to_string(PredictorKind kind);

// Column order of the feature vector. The lagged-volatility columns always
// come first: STD = [rv_d, rv_w, rv_m]; EXT appends [mom, dv, ea, us3m, hsi,
// ads, epu, vix]; "-5" drops rv_m and mom; "-1" additionally drops rv_w, dv,
// us3m and hsi.
std::span<const Feature> feature_columns(PredictorKind kind);
std::size_t feature_width(PredictorKind kind);
// Number of leading lagged-volatility columns (3, 2 or 1).
std::size_t volatility_width(PredictorKind kind);

bool is_extended(PredictorKind kind);
// Horizon suffix: 22 for full sets, 5 or 1 for reduced ones.
int horizon_of(PredictorKind kind);
PredictorKind with_horizon(PredictorKind kind, int horizon);

std::optional<FeatureVector> extract_features(const DailyRecord& record, PredictorKind kind);

// A day whose features are all available under a predictor kind.
struct FeatureRow {
    std::size_t day = 0;  // 1-based trading day of the asset
    Date date;
    FeatureVector x;
    std::optional<double> label;
};

std::vector<FeatureRow> feature_rows(std::span<const DailyRecord> records, PredictorKind kind);

struct LabeledRow {
    FeatureVector x;
    double y = 0.0;
    std::string asset;
    Date feature_date;
    Date label_date;
};

struct SupervisedDataSet {
    PredictorKind kind = PredictorKind::Std;
    std::vector<LabeledRow> rows;

    std::size_t size() const { return rows.size(); }
    bool empty() const { return rows.empty(); }
    std::size_t width() const { return feature_width(kind); }
};

// Rows whose features and label are all available, in chronological order.
SupervisedDataSet assemble(std::span<const DailyRecord> records, PredictorKind kind,
                           const std::string& asset_id = {});

// Rows with label_date on or before `cutoff`.
SupervisedDataSet truncate_to(const SupervisedDataSet& data, Date cutoff);

}  // namespace volxfer::data
