#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "volxfer/data_pipeline.h"

namespace volxfer::io {

// timestamp,open,high,low,close,volume
std::vector<data::IntradayBar> read_intraday_csv(const std::filesystem::path& path);
void write_intraday_csv(const std::filesystem::path& path, const std::vector<data::IntradayBar>& bars);

// date,value
data::MacroSeries read_macro_csv(const std::filesystem::path& path);

// date,ticker -> ticker -> announcement dates
std::map<std::string, std::set<Date>> read_earnings_csv(const std::filesystem::path& path);

// One column per DailyRecord field; unavailable values are empty cells.
inline constexpr const char* kDailyRecordHeader =
    "date,rv_d,rv_w,rv_m,mom,dv,ea,us3m,hsi,ads,epu,vix,label,close,volume";

void write_daily_records(std::ostream& out, const std::vector<data::DailyRecord>& records);
void write_daily_records(const std::filesystem::path& path,
                         const std::vector<data::DailyRecord>& records);
std::vector<data::DailyRecord> read_daily_records(const std::filesystem::path& path);

// Writes `content` through a temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace volxfer::io
