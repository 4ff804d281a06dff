#include "volxfer/common.h"

#include <charconv>

#include <fmt/format.h>

namespace volxfer {

namespace {

using namespace std::chrono;

int parse_int(std::string_view text, std::string_view whole) {
    int value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw ValidationError("malformed date/time '" + std::string(whole) + "'");
    }
    return value;
}

}  // namespace

Date parse_date(std::string_view text) {
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
        throw ValidationError("malformed date '" + std::string(text) + "', expected YYYY-MM-DD");
    }
    const year_month_day ymd{year{parse_int(text.substr(0, 4), text)},
                             month{static_cast<unsigned>(parse_int(text.substr(5, 2), text))},
                             day{static_cast<unsigned>(parse_int(text.substr(8, 2), text))}};
    if (!ymd.ok()) {
        throw ValidationError("invalid calendar date '" + std::string(text) + "'");
    }
    return sys_days{ymd};
}

std::string format_date(Date d) {
    const year_month_day ymd{d};
    return fmt::format("{:04d}-{:02d}-{:02d}", static_cast<int>(ymd.year()),
                       static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
}

seconds new_york_offset(sys_seconds utc) {
    const year y = year_month_day{floor<days>(utc)}.year();
    // DST starts 2:00 EST on the second Sunday of March (07:00 UTC) and ends
    // 2:00 EDT on the first Sunday of November (06:00 UTC).
    const sys_seconds start = sys_days{y / March / Sunday[2]} + hours{7};
    const sys_seconds end = sys_days{y / November / Sunday[1]} + hours{6};
    return (utc >= start && utc < end) ? hours{-4} : hours{-5};
}

ExchangeTime parse_timestamp(std::string_view text) {
    const std::string whole(text);
    if (text.size() < 16 || (text[10] != 'T' && text[10] != ' ') || text[13] != ':') {
        throw ValidationError("malformed timestamp '" + whole + "'");
    }
    const Date d = parse_date(text.substr(0, 10));
    const int hh = parse_int(text.substr(11, 2), text);
    const int mm = parse_int(text.substr(14, 2), text);
    std::size_t pos = 16;
    int ss = 0;
    if (pos < text.size() && text[pos] == ':') {
        if (text.size() < pos + 3) throw ValidationError("malformed timestamp '" + whole + "'");
        ss = parse_int(text.substr(pos + 1, 2), text);
        pos += 3;
        // fractional seconds are truncated
        if (pos < text.size() && text[pos] == '.') {
            ++pos;
            while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') ++pos;
        }
    }
    if (hh > 23 || mm > 59 || ss > 60) throw ValidationError("invalid time in '" + whole + "'");
    const sys_seconds wall = d + hours{hh} + minutes{mm} + seconds{ss};
    if (pos == text.size()) return wall;

    const std::string_view zone = text.substr(pos);
    seconds offset{0};
    if (zone == "Z") {
        offset = seconds{0};
    } else if ((zone[0] == '+' || zone[0] == '-') && zone.size() == 6 && zone[3] == ':') {
        const int oh = parse_int(zone.substr(1, 2), text);
        const int om = parse_int(zone.substr(4, 2), text);
        offset = hours{oh} + minutes{om};
        if (zone[0] == '-') offset = -offset;
    } else {
        throw ValidationError("unsupported UTC offset in '" + whole + "'");
    }
    const sys_seconds utc = wall - offset;
    return utc + new_york_offset(utc);
}

std::string format_timestamp(ExchangeTime t) {
    const Date d = floor<days>(t);
    const hh_mm_ss<seconds> tod{t - d};
    return fmt::format("{}T{:02d}:{:02d}:{:02d}", format_date(d), tod.hours().count(),
                       tod.minutes().count(), tod.seconds().count());
}

bool is_weekday(Date d) {
    const unsigned wd = weekday{d}.c_encoding();
    return wd != 0 && wd != 6;
}

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split(std::string_view line, char delim) {
    std::vector<std::string> fields;
    std::string token;
    for (char ch : line) {
        if (ch == delim) {
            fields.push_back(token);
            token.clear();
        } else {
            token.push_back(ch);
        }
    }
    fields.push_back(token);
    return fields;
}

std::string format_double(double v) { return fmt::format("{}", v); }

}  // namespace volxfer
