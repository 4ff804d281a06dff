#pragma once

#include <chrono>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace volxfer {

// Calendar trading day.
using Date = std::chrono::sys_days;

// Wall-clock time at the exchange (America/New_York), stored as if it were UTC.
using ExchangeTime = std::chrono::sys_seconds;

using FeatureVector = std::vector<double>;

class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class FitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class AlignmentError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// "YYYY-MM-DD" <-> Date. Throws ValidationError on malformed input.
Date parse_date(std::string_view text);
std::string format_date(Date d);

// ISO-8601 datetime, "YYYY-MM-DD[T ]HH:MM[:SS][Z|+HH:MM|-HH:MM]".
// A missing offset means exchange-local wall time; an explicit offset is
// converted to New York wall time (EST/EDT).
ExchangeTime parse_timestamp(std::string_view text);
std::string format_timestamp(ExchangeTime t);

// UTC offset of New York at the given UTC instant (-5h or -4h).
std::chrono::seconds new_york_offset(std::chrono::sys_seconds utc);

bool is_weekday(Date d);

std::string trim(std::string_view s);
std::vector<std::string> split(std::string_view line, char delim);

// Shortest decimal form that round-trips exactly.
std::string format_double(double v);

}  // namespace volxfer
