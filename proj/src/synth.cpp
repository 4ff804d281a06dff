#include "volxfer/synth.h"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <sstream>

#include "volxfer/csv_io.h"
#include "volxfer/rng.h"

namespace volxfer::synth {

using namespace std::chrono;

namespace {

constexpr std::size_t kBurnIn = 200;
constexpr std::size_t kIntradayReturns = 78;

HarDynamics regime(std::size_t index) {
    // Regime 0 is shared with the targets.
    if (index % 2 == 0) return {1e-4, 0.35, 0.35, 0.2, 0.5, true};
    return {4e-4, 0.6, 0.1, 0.1, 0.35, true};
}

std::string fixture_config(const PanelSpec& spec, std::size_t target_days,
                           const std::vector<std::string>& targets, const std::vector<std::string>& sources,
                           const std::vector<Date>& listing) {
    std::ostringstream c;
    c << "# Synthetic fixture panel\n";
    c << "seed = " << spec.seed << "\n";
    c << "output_dir = \"out\"\n";
    c << "threads = 1\n";
    c << "modes = [\"TO\", \"NP\", \"MTL\"]\n";
    c << "epsilons = [25, 50, 75]\n";
    c << "models = [\"HAR\", \"FNN\", \"XGB\"]\n";
    c << "predictor_sets = [\"STD\", \"EXT\"]\n";
    c << "periods = [";
    bool first = true;
    for (std::size_t s : {50, 150, 250, 350, 450}) {
        if (s + harness::kStandardEvalLength + 1 > target_days) continue;
        c << (first ? "" : ", ") << s;
        first = false;
    }
    c << "]\n";
    c << "scarcity_periods = " << (target_days >= 51 ? "[1, 5, 22]" : "[]") << "\n";
    c << "strategies = [\"1-1-1\", \"1-5-5\", \"1-5-22\"]\n";
    c << "subsequence_length = 22\n";
    c << "mcs_bootstrap = " << (spec.quick ? 500 : 5000) << "\n";
    c << "mcs_alpha = 0.05\n";
    if (spec.quick) {
        c << "\n[fnn]\nmax_epochs = 40\npatience = 10\n";
        c << "\n[xgb]\nrounds = 10\n";
    }
    c << "\n[macro]\n";
    for (const char* m : {"us3m", "hsi", "ads", "epu", "vix"}) c << m << " = \"macro/" << m << ".csv\"\n";
    c << "\n[earnings]\npath = \"earnings.csv\"\n";
    for (std::size_t i = 0; i < targets.size(); ++i) {
        c << "\n[[target]]\nid = \"" << targets[i] << "\"\npath = \"intraday/" << targets[i] << ".csv\"\n"
          << "listing_date = \"" << format_date(listing[i]) << "\"\n";
    }
    for (const auto& s : sources) {
        c << "\n[[source]]\nid = \"" << s << "\"\npath = \"intraday/" << s << ".csv\"\n";
    }
    return c.str();
}

void write_intraday(const std::filesystem::path& path, std::span<const double> rv, std::span<const Date> dates,
                    std::mt19937_64& engine) {
    std::normal_distribution<double> z(0.0, 1.0);
    double log_price = std::log(50.0);
    std::vector<data::IntradayBar> bars;
    bars.reserve(rv.size() * (kIntradayReturns + 1));
    for (std::size_t d = 0; d < rv.size(); ++d) {
        log_price += std::sqrt(0.1 * rv[d]) * z(engine);  // overnight move
        const double sd = std::sqrt(rv[d] / static_cast<double>(kIntradayReturns));
        const double base_volume = 2e4 * std::exp(0.3 * z(engine)) * std::sqrt(rv[d] / 1e-4);
        for (std::size_t i = 0; i <= kIntradayReturns; ++i) {
            if (i > 0) log_price += sd * z(engine);
            const ExchangeTime t = sys_seconds{dates[d]} + minutes{data::kSessionOpenMinute + 5 * static_cast<int>(i)};
            bars.push_back({t, std::exp(log_price), std::round(base_volume * std::exp(0.5 * z(engine)))});
        }
    }
    io::write_intraday_csv(path, bars);
}

void write_macro(const std::filesystem::path& path, std::span<const Date> dates, std::mt19937_64& engine,
                 double start, double step, bool log_walk, double floor_value, double mean_reversion) {
    std::normal_distribution<double> z(0.0, 1.0);
    std::ostringstream out;
    out << "date,value\n";
    double v = start;
    for (const Date d : dates) {
        if (log_walk) {
            v *= std::exp(step * z(engine));
        } else {
            v += mean_reversion * (start - v) + step * z(engine);
            v = std::max(v, floor_value);
        }
        out << format_date(d) << ',' << format_double(v) << '\n';
    }
    io::write_file_atomic(path, out.str());
}

}  // namespace

std::vector<double> simulate_rv(const HarDynamics& h, std::size_t days, std::mt19937_64& engine) {
    const double persistence = h.beta_d + h.beta_w + h.beta_m;
    if (!(persistence < 1.0) || h.level <= 0.0 || h.noise < 0.0) {
        throw ValidationError("HAR dynamics must be stationary with a positive level");
    }
    const double c = h.level * (1.0 - persistence);
    std::normal_distribution<double> z(0.0, 1.0);
    std::deque<double> history(data::kMonthDays, h.level);
    std::vector<double> out;
    out.reserve(days);
    for (std::size_t t = 0; t < kBurnIn + days; ++t) {
        const double rv_d = history.back();
        const double rv_w = std::accumulate(history.end() - data::kWeekDays, history.end(), 0.0) / data::kWeekDays;
        const double rv_m = std::accumulate(history.begin(), history.end(), 0.0) / data::kMonthDays;
        const double mean = c + h.beta_d * rv_d + h.beta_w * rv_w + h.beta_m * rv_m;
        const double e = z(engine);
        double next = h.multiplicative ? mean * std::exp(h.noise * e - 0.5 * h.noise * h.noise) : mean + h.noise * e;
        if (!(next > 0.0)) next = std::max(mean, h.level * 1e-3);
        history.pop_front();
        history.push_back(next);
        if (t >= kBurnIn) out.push_back(next);
    }
    return out;
}

std::vector<Date> business_days(Date start, std::size_t count) {
    std::vector<Date> out;
    out.reserve(count);
    for (Date d = start; out.size() < count; d += days{1}) {
        if (is_weekday(d)) out.push_back(d);
    }
    return out;
}

harness::AssetPanel daily_panel(const std::string& id, std::span<const double> rv, std::span<const Date> dates,
                                std::mt19937_64& engine) {
    if (rv.size() != dates.size()) throw ValidationError("daily_panel: rv and dates differ in length");
    std::normal_distribution<double> z(0.0, 1.0);
    std::vector<data::DailyObservation> obs;
    double log_price = std::log(50.0);
    for (std::size_t t = 0; t < rv.size(); ++t) {
        log_price += std::sqrt(rv[t]) * z(engine);
        obs.push_back({dates[t], rv[t], std::exp(log_price), 1e6 * std::exp(0.3 * z(engine))});
    }
    return {id, data::build_daily_records(obs, {}, {})};
}

void write_fixture(const std::filesystem::path& dir, const PanelSpec& spec) {
    if (spec.days < 60) throw ValidationError("synth: at least 60 source days are needed");
    const std::size_t target_days = spec.target_days == 0 ? std::min<std::size_t>(spec.days, 600) : spec.target_days;
    if (target_days > spec.days) throw ValidationError("synth: target history cannot exceed the source history");
    if (spec.targets == 0) throw ValidationError("synth: at least one target is needed");

    std::filesystem::create_directories(dir / "intraday");
    std::filesystem::create_directories(dir / "macro");
    const auto dates = business_days(sys_days{year{2012} / January / 2}, spec.days);

    std::vector<std::string> sources, targets;
    std::vector<Date> listing;
    std::ostringstream earnings;
    earnings << "date,ticker\n";
    auto add_earnings = [&](const std::string& id, std::span<const Date> asset_dates, std::mt19937_64& engine) {
        std::uniform_int_distribution<std::size_t> offset(0, 62);
        for (std::size_t i = offset(engine); i < asset_dates.size(); i += 63) {
            earnings << format_date(asset_dates[i]) << ',' << id << '\n';
        }
    };

    for (std::size_t i = 0; i < spec.sources; ++i) {
        const std::string id = "SRC" + std::to_string(i + 1);
        auto engine = make_engine(spec.seed, "synth/" + id);
        const auto rv = simulate_rv(regime(i), spec.days, engine);
        write_intraday(dir / "intraday" / (id + ".csv"), rv, dates, engine);
        add_earnings(id, dates, engine);
        sources.push_back(id);
    }
    for (std::size_t i = 0; i < spec.targets; ++i) {
        const std::string id = "NEW" + std::to_string(i + 1);
        auto engine = make_engine(spec.seed, "synth/" + id);
        const auto rv = simulate_rv(regime(0), target_days, engine);
        const std::span<const Date> own(dates.end() - static_cast<std::ptrdiff_t>(target_days), dates.end());
        write_intraday(dir / "intraday" / (id + ".csv"), rv, own, engine);
        add_earnings(id, own, engine);
        targets.push_back(id);
        listing.push_back(own.front());
    }
    io::write_file_atomic(dir / "earnings.csv", earnings.str());

    // Macro levels cover a few weeks before the first trading day so that
    // forward fill always finds a value.
    const auto macro_dates = business_days(dates.front() - days{30}, spec.days + 22);
    auto engine = make_engine(spec.seed, "synth/macro");
    write_macro(dir / "macro" / "us3m.csv", macro_dates, engine, 2.0, 0.02, false, 0.0, 0.01);
    write_macro(dir / "macro" / "hsi.csv", macro_dates, engine, 20000.0, 0.012, true, 0.0, 0.0);
    write_macro(dir / "macro" / "ads.csv", macro_dates, engine, 0.0, 0.1, false, -10.0, 0.05);
    write_macro(dir / "macro" / "epu.csv", macro_dates, engine, 100.0, 8.0, false, 5.0, 0.1);
    write_macro(dir / "macro" / "vix.csv", macro_dates, engine, 18.0, 1.0, false, 8.0, 0.05);

    io::write_file_atomic(dir / "config.toml", fixture_config(spec, target_days, targets, sources, listing));
}

}  // namespace volxfer::synth
