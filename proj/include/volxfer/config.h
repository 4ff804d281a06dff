#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "volxfer/data_pipeline.h"
#include "volxfer/harness.h"
#include "volxfer/models.h"
#include "volxfer/transfer_select.h"

namespace volxfer::config {

// Minimal TOML reader: `key = value` pairs with strings, integers, floats,
// booleans and (possibly multi-line) arrays of those; [table] and
// [[array-of-tables]] headers; `#` comments. Every value remembers its line.
struct Value;
using Array = std::vector<Value>;

struct Value {
    std::variant<std::string, std::int64_t, double, bool, Array> data;
    std::size_t line = 0;

    bool is_string() const { return std::holds_alternative<std::string>(data); }
    bool is_integer() const { return std::holds_alternative<std::int64_t>(data); }
    bool is_number() const { return is_integer() || std::holds_alternative<double>(data); }
    bool is_bool() const { return std::holds_alternative<bool>(data); }
    bool is_array() const { return std::holds_alternative<Array>(data); }
};

struct Table {
    std::map<std::string, Value> values;
    std::size_t line = 0;  // line of the header (0 for the root table)
};

struct Document {
    Table root;
    std::map<std::string, Table> tables;
    std::map<std::string, std::vector<Table>> table_arrays;
};

// Throws ConfigError("<name>:<line>: ...") on malformed input.
Document parse_toml(const std::string& text, const std::string& name = "config");

struct AssetSource {
    std::string id;
    std::filesystem::path path;
    std::optional<Date> listing_date;  // targets: data before it are ignored
    std::size_t line = 0;
};

struct MacroPaths {
    std::filesystem::path us3m, hsi, ads, epu, vix;
};

struct ExperimentConfig {
    std::filesystem::path config_dir;
    std::uint64_t seed = 0;
    std::filesystem::path output_dir;
    std::size_t threads = 1;
    std::vector<transfer::Approach> modes;
    std::vector<double> epsilons;
    std::vector<models::Family> families;
    std::vector<data::PredictorKind> predictor_sets;  // full kinds
    std::vector<std::size_t> periods;                 // standard sample periods
    std::vector<std::size_t> scarcity_periods;
    std::vector<harness::Strategy> strategies;
    std::size_t subsequence_length = 22;
    std::size_t mcs_bootstrap = 5000;
    double mcs_alpha = 0.05;
    int sampling_minutes = 5;
    data::SessionCalendar calendar;
    MacroPaths macro;
    std::optional<std::filesystem::path> earnings;
    std::vector<AssetSource> targets;
    std::vector<AssetSource> sources;
    models::FitConfig fit;  // [fnn] and [xgb] overrides
    // Canonical text of every setting that affects results; keys caches.
    std::string fingerprint;

    std::vector<harness::SamplePeriod> sample_periods() const;  // standard then scarcity
};

// Reads and validates the file; relative paths resolve against its
// directory and must exist.
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& config_dir,
                              const std::string& name = "config");

}  // namespace volxfer::config
