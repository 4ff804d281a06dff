#include "volxfer/csv_io.h"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

namespace volxfer::io {

namespace {

std::string where(const std::filesystem::path& path, std::size_t line) {
    return path.string() + ":" + std::to_string(line);
}

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open '" + path.string() + "'");
    return in;
}

std::vector<std::string> normalized_header(const std::string& line) {
    auto fields = split(line, ',');
    for (auto& f : fields) {
        f = trim(f);
        std::transform(f.begin(), f.end(), f.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    }
    return fields;
}

std::size_t column_of(const std::vector<std::string>& header, const std::string& name,
                      const std::filesystem::path& path) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
        throw ValidationError(where(path, 1) + ": missing column '" + name + "'");
    }
    return static_cast<std::size_t>(it - header.begin());
}

double parse_number(const std::string& text, const std::filesystem::path& path, std::size_t line) {
    const std::string t = trim(text);
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
    if (t.empty() || ec != std::errc{} || ptr != t.data() + t.size()) {
        throw ValidationError(where(path, line) + ": bad number '" + t + "'");
    }
    return value;
}

std::optional<double> parse_optional(const std::string& text, const std::filesystem::path& path,
                                     std::size_t line) {
    if (trim(text).empty()) return std::nullopt;
    return parse_number(text, path, line);
}

std::string cell(const std::optional<double>& v) { return v ? format_double(*v) : std::string{}; }

template <typename RowFn>
void for_each_row(const std::filesystem::path& path, std::vector<std::string>& header, RowFn&& fn) {
    std::ifstream in = open_input(path);
    std::string line;
    if (!std::getline(in, line)) throw ValidationError(path.string() + ": empty file");
    header = normalized_header(line);
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto fields = split(line, ',');
        if (fields.size() != header.size()) {
            throw ValidationError(where(path, line_no) + ": expected " + std::to_string(header.size()) +
                                  " fields, got " + std::to_string(fields.size()));
        }
        fn(fields, line_no);
    }
}

}  // namespace

std::vector<data::IntradayBar> read_intraday_csv(const std::filesystem::path& path) {
    std::vector<data::IntradayBar> bars;
    std::vector<std::string> header;
    std::size_t ts = 0, close = 0, volume = 0;
    bool resolved = false;
    for_each_row(path, header, [&](const std::vector<std::string>& f, std::size_t line) {
        if (!resolved) {
            ts = column_of(header, "timestamp", path);
            close = column_of(header, "close", path);
            volume = column_of(header, "volume", path);
            resolved = true;
        }
        data::IntradayBar bar;
        try {
            bar.timestamp = parse_timestamp(trim(f[ts]));
        } catch (const ValidationError& e) {
            throw ValidationError(where(path, line) + ": " + e.what());
        }
        bar.close = parse_number(f[close], path, line);
        bar.volume = parse_number(f[volume], path, line);
        bars.push_back(bar);
    });
    return bars;
}

void write_intraday_csv(const std::filesystem::path& path, const std::vector<data::IntradayBar>& bars) {
    std::ostringstream out;
    out << "timestamp,open,high,low,close,volume\n";
    for (const auto& b : bars) {
        const std::string c = format_double(b.close);
        out << format_timestamp(b.timestamp) << ',' << c << ',' << c << ',' << c << ',' << c << ','
            << format_double(b.volume) << '\n';
    }
    write_file_atomic(path, out.str());
}

data::MacroSeries read_macro_csv(const std::filesystem::path& path) {
    std::vector<std::pair<Date, double>> points;
    std::vector<std::string> header;
    for_each_row(path, header, [&](const std::vector<std::string>& f, std::size_t line) {
        const std::size_t d = column_of(header, "date", path);
        const std::size_t v = column_of(header, "value", path);
        try {
            points.emplace_back(parse_date(trim(f[d])), parse_number(f[v], path, line));
        } catch (const ValidationError& e) {
            const std::string msg = e.what();
            if (msg.rfind(path.string(), 0) == 0) throw;
            throw ValidationError(where(path, line) + ": " + msg);
        }
    });
    try {
        return data::MacroSeries(std::move(points));
    } catch (const ValidationError& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

std::map<std::string, std::set<Date>> read_earnings_csv(const std::filesystem::path& path) {
    std::map<std::string, std::set<Date>> out;
    std::vector<std::string> header;
    for_each_row(path, header, [&](const std::vector<std::string>& f, std::size_t line) {
        const std::size_t d = column_of(header, "date", path);
        const std::size_t t = column_of(header, "ticker", path);
        try {
            out[trim(f[t])].insert(parse_date(trim(f[d])));
        } catch (const ValidationError& e) {
            throw ValidationError(where(path, line) + ": " + e.what());
        }
    });
    return out;
}

void write_daily_records(std::ostream& out, const std::vector<data::DailyRecord>& records) {
    out << kDailyRecordHeader << '\n';
    for (const auto& r : records) {
        out << format_date(r.date) << ',' << format_double(r.rv_d) << ',' << cell(r.rv_w) << ','
            << cell(r.rv_m) << ',' << cell(r.mom) << ',' << cell(r.dv) << ',' << r.ea << ','
            << cell(r.us3m) << ',' << cell(r.hsi) << ',' << cell(r.ads) << ',' << cell(r.epu) << ','
            << cell(r.vix) << ',' << cell(r.label) << ',' << format_double(r.close) << ','
            << format_double(r.volume) << '\n';
    }
}

void write_daily_records(const std::filesystem::path& path,
                         const std::vector<data::DailyRecord>& records) {
    std::ostringstream out;
    write_daily_records(out, records);
    write_file_atomic(path, out.str());
}

std::vector<data::DailyRecord> read_daily_records(const std::filesystem::path& path) {
    std::vector<data::DailyRecord> records;
    std::vector<std::string> header;
    for_each_row(path, header, [&](const std::vector<std::string>& f, std::size_t line) {
        if (header != normalized_header(kDailyRecordHeader)) {
            throw ValidationError(path.string() + ": unexpected daily record header");
        }
        data::DailyRecord r;
        r.date = parse_date(trim(f[0]));
        r.rv_d = parse_number(f[1], path, line);
        r.rv_w = parse_optional(f[2], path, line);
        r.rv_m = parse_optional(f[3], path, line);
        r.mom = parse_optional(f[4], path, line);
        r.dv = parse_optional(f[5], path, line);
        r.ea = static_cast<int>(parse_number(f[6], path, line));
        r.us3m = parse_optional(f[7], path, line);
        r.hsi = parse_optional(f[8], path, line);
        r.ads = parse_optional(f[9], path, line);
        r.epu = parse_optional(f[10], path, line);
        r.vix = parse_optional(f[11], path, line);
        r.label = parse_optional(f[12], path, line);
        r.close = parse_number(f[13], path, line);
        r.volume = parse_number(f[14], path, line);
        records.push_back(r);
    });
    return records;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ValidationError("cannot write '" + tmp.string() + "'");
        out << content;
        if (!out) throw ValidationError("write failed for '" + tmp.string() + "'");
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace volxfer::io
