#include "volxfer/config.h"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace volxfer::config {

namespace {

class Parser {
public:
    Parser(const std::string& text, std::string name) : s_(text), name_(std::move(name)) {}

    Document parse() {
        Document doc;
        Table* current = &doc.root;
        while (true) {
            skip_blank_lines();
            if (eof()) break;
            if (peek() == '[') {
                current = header(doc);
            } else {
                key_value(*current);
            }
            end_of_line();
        }
        return doc;
    }

private:
    [[noreturn]] void fail(const std::string& msg) const {
        throw ConfigError(name_ + ":" + std::to_string(line_) + ": " + msg);
    }

    [[noreturn]] void fail_at(std::size_t line, const std::string& msg) const {
        throw ConfigError(name_ + ":" + std::to_string(line) + ": " + msg);
    }

    bool eof() const { return pos_ >= s_.size(); }
    char peek() const { return eof() ? '\0' : s_[pos_]; }
    char get() {
        const char c = s_[pos_++];
        if (c == '\n') ++line_;
        return c;
    }

    void skip_spaces() {
        while (!eof() && (peek() == ' ' || peek() == '\t')) get();
    }
    void skip_comment() {
        if (peek() == '#') {
            while (!eof() && peek() != '\n') get();
        }
    }
    void skip_blank_lines() {
        while (!eof()) {
            skip_spaces();
            skip_comment();
            if (peek() == '\r') get();
            if (peek() == '\n') {
                get();
                continue;
            }
            break;
        }
    }
    // Spaces, comments and newlines inside arrays.
    void skip_array_space() {
        while (!eof()) {
            skip_spaces();
            skip_comment();
            if (peek() == '\n' || peek() == '\r') {
                get();
                continue;
            }
            break;
        }
    }
    void end_of_line() {
        skip_spaces();
        skip_comment();
        if (peek() == '\r') get();
        if (eof()) return;
        if (peek() != '\n') fail(std::string("unexpected character '") + peek() + "'");
        get();
    }

    static bool bare_char(char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
    }

    std::string key() {
        skip_spaces();
        if (peek() == '"' || peek() == '\'') return string_literal();
        std::string k;
        while (!eof() && bare_char(peek())) k += get();
        if (k.empty()) fail("expected a key");
        return k;
    }

    Table* header(Document& doc) {
        const std::size_t header_line = line_;
        get();
        const bool is_array = peek() == '[';
        if (is_array) get();
        std::string name = key();
        skip_spaces();
        if (peek() != ']') fail("expected ']' after table name");
        get();
        if (is_array) {
            if (peek() != ']') fail("expected ']]' after array-of-tables name");
            get();
            if (doc.tables.contains(name)) fail("'" + name + "' is already a table");
            auto& arr = doc.table_arrays[name];
            arr.push_back(Table{{}, header_line});
            return &arr.back();
        }
        if (doc.table_arrays.contains(name)) fail("'" + name + "' is already an array of tables");
        auto [it, inserted] = doc.tables.emplace(name, Table{{}, header_line});
        if (!inserted) fail("duplicate table [" + name + "]");
        return &it->second;
    }

    void key_value(Table& table) {
        const std::size_t key_line = line_;
        std::string k = key();
        skip_spaces();
        if (peek() != '=') fail("expected '=' after key '" + k + "'");
        get();
        skip_spaces();
        Value v = value();
        v.line = key_line;
        if (!table.values.emplace(k, std::move(v)).second) {
            line_ = key_line;
            fail("duplicate key '" + k + "'");
        }
    }

    std::string string_literal() {
        const char quote = get();
        std::string out;
        while (true) {
            if (eof() || peek() == '\n') fail("unterminated string");
            char c = get();
            if (c == quote) break;
            if (c == '\\' && quote == '"') {
                if (eof()) fail("unterminated string");
                const char e = get();
                switch (e) {
                    case 'n': out += '\n'; break;
                    case 't': out += '\t'; break;
                    case '"': out += '"'; break;
                    case '\\': out += '\\'; break;
                    default: fail(std::string("unsupported escape '\\") + e + "'");
                }
                continue;
            }
            out += c;
        }
        return out;
    }

    Value value() {
        Value v;
        v.line = line_;
        const char c = peek();
        if (c == '"' || c == '\'') {
            v.data = string_literal();
        } else if (c == '[') {
            get();
            Array items;
            while (true) {
                skip_array_space();
                if (eof()) fail_at(v.line, "array is never closed");
                if (peek() == ']') {
                    get();
                    break;
                }
                items.push_back(value());
                skip_array_space();
                if (peek() == ',') {
                    get();
                    continue;
                }
                if (peek() == ']') {
                    get();
                    break;
                }
                if (eof()) fail_at(v.line, "array is never closed");
                fail("expected ',' or ']' in array");
            }
            v.data = std::move(items);
        } else {
            std::string tok;
            while (!eof() && (bare_char(peek()) || peek() == '+')) tok += get();
            if (tok.empty()) fail("expected a value");
            if (tok == "true") {
                v.data = true;
            } else if (tok == "false") {
                v.data = false;
            } else {
                tok.erase(std::remove(tok.begin(), tok.end(), '_'), tok.end());
                const bool is_float = tok.find_first_of(".eE") != std::string::npos &&
                                      tok.find_first_not_of("0123456789+-.eE") == std::string::npos;
                const char* first = tok.data() + (tok.front() == '+' ? 1 : 0);
                const char* last = tok.data() + tok.size();
                if (is_float) {
                    double d = 0.0;
                    auto [p, ec] = std::from_chars(first, last, d);
                    if (ec != std::errc() || p != last) fail("malformed number '" + tok + "'");
                    v.data = d;
                } else {
                    std::int64_t i = 0;
                    auto [p, ec] = std::from_chars(first, last, i);
                    if (ec != std::errc() || p != last) fail("malformed value '" + tok + "'");
                    v.data = i;
                }
            }
        }
        return v;
    }

    const std::string& s_;
    std::string name_;
    std::size_t pos_ = 0;
    std::size_t line_ = 1;
};

// Typed access with line-numbered diagnostics and unknown-key detection.
class Reader {
public:
    Reader(const Table& t, std::string name, std::string section)
        : t_(t), name_(std::move(name)), section_(std::move(section)) {}

    [[noreturn]] void fail(std::size_t line, const std::string& msg) const {
        throw ConfigError(name_ + ":" + std::to_string(line) + ": " + msg);
    }

    const Value* find(const std::string& key) {
        used_.insert(key);
        const auto it = t_.values.find(key);
        return it == t_.values.end() ? nullptr : &it->second;
    }

    const Value& require(const std::string& key) {
        const Value* v = find(key);
        if (v == nullptr) fail(t_.line, "missing required key '" + key + "'" + where());
        return *v;
    }

    std::string str(const Value& v, const std::string& key) const {
        if (!v.is_string()) fail(v.line, "'" + key + "' must be a string");
        return std::get<std::string>(v.data);
    }
    double num(const Value& v, const std::string& key) const {
        if (!v.is_number()) fail(v.line, "'" + key + "' must be a number");
        return v.is_integer() ? static_cast<double>(std::get<std::int64_t>(v.data)) : std::get<double>(v.data);
    }
    std::int64_t integer(const Value& v, const std::string& key) const {
        if (!v.is_integer()) fail(v.line, "'" + key + "' must be an integer");
        return std::get<std::int64_t>(v.data);
    }
    std::size_t count(const Value& v, const std::string& key, std::size_t min = 0) const {
        const auto i = integer(v, key);
        if (i < static_cast<std::int64_t>(min)) fail(v.line, "'" + key + "' must be at least " + std::to_string(min));
        return static_cast<std::size_t>(i);
    }
    bool boolean(const Value& v, const std::string& key) const {
        if (!v.is_bool()) fail(v.line, "'" + key + "' must be true or false");
        return std::get<bool>(v.data);
    }
    const Array& array(const Value& v, const std::string& key) const {
        if (!v.is_array()) fail(v.line, "'" + key + "' must be an array");
        const auto& a = std::get<Array>(v.data);
        if (a.empty()) fail(v.line, "'" + key + "' must not be empty");
        return a;
    }

    void reject_unknown() const {
        for (const auto& [k, v] : t_.values) {
            if (!used_.contains(k)) fail(v.line, "unknown key '" + k + "'" + where());
        }
    }

    std::size_t line() const { return t_.line; }

private:
    std::string where() const { return section_.empty() ? std::string() : " in [" + section_ + "]"; }

    const Table& t_;
    std::string name_;
    std::string section_;
    std::set<std::string> used_;
};

template <typename T, typename Fn>
std::vector<T> parse_list(Reader& r, const std::string& key, std::vector<T> fallback, Fn convert) {
    const Value* v = r.find(key);
    if (v == nullptr) return fallback;
    std::vector<T> out;
    if (v->is_array() && std::get<Array>(v->data).empty()) return out;
    for (const auto& item : r.array(*v, key)) {
        try {
            out.push_back(convert(item));
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception& e) {
            r.fail(item.line, "'" + key + "': " + e.what());
        }
    }
    return out;
}

std::filesystem::path resolve(Reader& r, const Value& v, const std::string& key, const std::filesystem::path& dir) {
    std::filesystem::path p = r.str(v, key);
    if (p.is_relative()) p = dir / p;
    p = p.lexically_normal();
    if (!std::filesystem::exists(p)) r.fail(v.line, "'" + key + "' refers to a missing file: " + p.string());
    return p;
}

void check_id(Reader& r, const std::string& id, std::size_t line) {
    if (id.empty()) r.fail(line, "asset id must not be empty");
    for (char c : id) {
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.')) {
            r.fail(line, "asset id '" + id + "' may only contain letters, digits, '_', '-' and '.'");
        }
    }
}

std::vector<AssetSource> parse_assets(const Document& doc, const std::string& section, const std::string& name,
                                      const std::filesystem::path& dir, bool allow_listing) {
    std::vector<AssetSource> out;
    const auto it = doc.table_arrays.find(section);
    if (it == doc.table_arrays.end()) return out;
    for (const auto& t : it->second) {
        Reader r(t, name, section);
        AssetSource a;
        a.line = t.line;
        const Value& id = r.require("id");
        a.id = r.str(id, "id");
        check_id(r, a.id, id.line);
        a.path = resolve(r, r.require("path"), "path", dir);
        if (allow_listing) {
            if (const Value* v = r.find("listing_date")) {
                try {
                    a.listing_date = parse_date(r.str(*v, "listing_date"));
                } catch (const ValidationError& e) {
                    r.fail(v->line, e.what());
                }
            }
        }
        r.reject_unknown();
        out.push_back(std::move(a));
    }
    return out;
}

}  // namespace

Document parse_toml(const std::string& text, const std::string& name) { return Parser(text, name).parse(); }

std::vector<harness::SamplePeriod> ExperimentConfig::sample_periods() const {
    std::vector<harness::SamplePeriod> out;
    for (std::size_t s : periods) out.push_back(harness::standard_period(s));
    for (std::size_t s : scarcity_periods) {
        auto p = harness::scarcity_period(s);
        out.push_back(p);
    }
    return out;
}

ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& config_dir,
                              const std::string& name) {
    const Document doc = parse_toml(text, name);
    Reader root(doc.root, name, "");
    ExperimentConfig cfg;
    cfg.config_dir = config_dir;

    cfg.seed = static_cast<std::uint64_t>(root.integer(root.require("seed"), "seed"));
    {
        const Value& v = root.require("output_dir");
        cfg.output_dir = root.str(v, "output_dir");
        if (cfg.output_dir.is_relative()) cfg.output_dir = (config_dir / cfg.output_dir).lexically_normal();
    }
    if (const Value* v = root.find("threads")) cfg.threads = root.count(*v, "threads", 1);
    cfg.modes = parse_list<transfer::Approach>(
        root, "modes", {transfer::Approach::TargetOnly, transfer::Approach::NaivePooling, transfer::Approach::MultiSource},
        [&](const Value& v) { return transfer::parse_approach(root.str(v, "modes")); });
    cfg.epsilons = parse_list<double>(root, "epsilons", {25.0, 50.0, 75.0}, [&](const Value& v) {
        const double e = root.num(v, "epsilons");
        if (!(e > 0.0 && e < 100.0)) root.fail(v.line, "epsilon must lie strictly between 0 and 100");
        return e;
    });
    cfg.families = parse_list<models::Family>(
        root, "models", {models::Family::Har, models::Family::Fnn, models::Family::Boosted},
        [&](const Value& v) { return models::parse_family(root.str(v, "models")); });
    cfg.predictor_sets = parse_list<data::PredictorKind>(
        root, "predictor_sets", {data::PredictorKind::Std, data::PredictorKind::Ext}, [&](const Value& v) {
            const auto k = data::parse_predictor_kind(root.str(v, "predictor_sets"));
            if (data::horizon_of(k) != 22) root.fail(v.line, "predictor_sets lists full sets (STD or EXT)");
            return k;
        });
    cfg.periods = parse_list<std::size_t>(root, "periods", {50, 150, 250, 350, 450}, [&](const Value& v) {
        const std::size_t s = root.count(v, "periods");
        if (s <= data::kMonthDays) root.fail(v.line, "standard periods start after day 22");
        return s;
    });
    cfg.scarcity_periods = parse_list<std::size_t>(root, "scarcity_periods", {1, 5, 22}, [&](const Value& v) {
        const std::size_t s = root.count(v, "scarcity_periods");
        if (s != 1 && s != 5 && s != 22) root.fail(v.line, "scarcity periods are 1, 5 and 22");
        return s;
    });
    cfg.strategies = parse_list<harness::Strategy>(
        root, "strategies",
        {harness::Strategy::OneOneOne, harness::Strategy::OneFiveFive, harness::Strategy::OneFiveTwentyTwo},
        [&](const Value& v) { return harness::parse_strategy(root.str(v, "strategies")); });
    if (const Value* v = root.find("subsequence_length")) cfg.subsequence_length = root.count(*v, "subsequence_length", 1);
    if (const Value* v = root.find("mcs_bootstrap")) cfg.mcs_bootstrap = root.count(*v, "mcs_bootstrap", 1);
    if (const Value* v = root.find("mcs_alpha")) {
        cfg.mcs_alpha = root.num(*v, "mcs_alpha");
        if (!(cfg.mcs_alpha > 0.0 && cfg.mcs_alpha < 1.0)) root.fail(v->line, "mcs_alpha must lie in (0, 1)");
    }
    if (const Value* v = root.find("sampling_minutes")) {
        cfg.sampling_minutes = static_cast<int>(root.count(*v, "sampling_minutes", 1));
    }
    if (const Value* v = root.find("include_half_days")) {
        cfg.calendar.include_half_days = root.boolean(*v, "include_half_days");
    }
    auto dates = [&](const std::string& key) {
        std::set<Date> out;
        const Value* v = root.find(key);
        if (v == nullptr) return out;
        if (!v->is_array()) root.fail(v->line, "'" + key + "' must be an array");
        for (const auto& item : std::get<Array>(v->data)) {
            try {
                out.insert(parse_date(root.str(item, key)));
            } catch (const ValidationError& e) {
                root.fail(item.line, e.what());
            }
        }
        return out;
    };
    cfg.calendar.holidays = dates("holidays");
    cfg.calendar.half_days = dates("half_days");
    root.reject_unknown();
    auto require_items = [&](bool empty, const std::string& key) {
        if (empty) root.fail(root.find(key)->line, "'" + key + "' must not be empty");
    };
    require_items(cfg.modes.empty(), "modes");
    require_items(cfg.families.empty(), "models");
    require_items(cfg.predictor_sets.empty(), "predictor_sets");
    if (std::find(cfg.modes.begin(), cfg.modes.end(), transfer::Approach::MultiSource) != cfg.modes.end()) {
        require_items(cfg.epsilons.empty(), "epsilons");
    }
    if (cfg.periods.empty() && cfg.scarcity_periods.empty()) {
        throw ConfigError(name + ": 'periods' and 'scarcity_periods' are both empty");
    }

    const auto macro = doc.tables.find("macro");
    if (macro == doc.tables.end()) throw ConfigError(name + ": missing [macro] table");
    {
        Reader r(macro->second, name, "macro");
        cfg.macro.us3m = resolve(r, r.require("us3m"), "us3m", config_dir);
        cfg.macro.hsi = resolve(r, r.require("hsi"), "hsi", config_dir);
        cfg.macro.ads = resolve(r, r.require("ads"), "ads", config_dir);
        cfg.macro.epu = resolve(r, r.require("epu"), "epu", config_dir);
        cfg.macro.vix = resolve(r, r.require("vix"), "vix", config_dir);
        r.reject_unknown();
    }
    if (const auto it = doc.tables.find("earnings"); it != doc.tables.end()) {
        Reader r(it->second, name, "earnings");
        cfg.earnings = resolve(r, r.require("path"), "path", config_dir);
        r.reject_unknown();
    }
    if (const auto it = doc.tables.find("fnn"); it != doc.tables.end()) {
        Reader r(it->second, name, "fnn");
        if (const Value* v = r.find("max_epochs")) cfg.fit.max_epochs = r.count(*v, "max_epochs", 1);
        if (const Value* v = r.find("patience")) cfg.fit.patience = r.count(*v, "patience", 1);
        if (const Value* v = r.find("learning_rate")) cfg.fit.adam.learning_rate = r.num(*v, "learning_rate");
        r.reject_unknown();
    }
    if (const auto it = doc.tables.find("xgb"); it != doc.tables.end()) {
        Reader r(it->second, name, "xgb");
        if (const Value* v = r.find("rounds")) cfg.fit.boost.rounds = r.count(*v, "rounds", 1);
        if (const Value* v = r.find("max_depth")) cfg.fit.boost.max_depth = r.count(*v, "max_depth", 0);
        r.reject_unknown();
    }
    for (const auto& [t, table] : doc.tables) {
        if (t != "macro" && t != "earnings" && t != "fnn" && t != "xgb") {
            throw ConfigError(name + ":" + std::to_string(table.line) + ": unknown table [" + t + "]");
        }
    }
    for (const auto& [t, arr] : doc.table_arrays) {
        if (t != "target" && t != "source") {
            throw ConfigError(name + ":" + std::to_string(arr.front().line) + ": unknown array of tables [[" + t + "]]");
        }
    }
    try {
        cfg.fit.validate();
    } catch (const ValidationError& e) {
        throw ConfigError(name + ": " + e.what());
    }

    cfg.targets = parse_assets(doc, "target", name, config_dir, true);
    cfg.sources = parse_assets(doc, "source", name, config_dir, false);
    if (cfg.targets.empty()) throw ConfigError(name + ": at least one [[target]] is required");
    std::set<std::string> ids;
    for (const auto* list : {&cfg.targets, &cfg.sources}) {
        for (const auto& a : *list) {
            if (!ids.insert(a.id).second) {
                throw ConfigError(name + ":" + std::to_string(a.line) + ": duplicate asset id '" + a.id + "'");
            }
        }
    }
    const bool pooled = std::any_of(cfg.modes.begin(), cfg.modes.end(),
                                    [](auto m) { return m != transfer::Approach::TargetOnly; });
    if (pooled && cfg.sources.empty()) throw ConfigError(name + ": NP and MTL modes need at least one [[source]]");

    // Settings that influence results, in a canonical form. Thread count and
    // output location are deliberately left out.
    std::ostringstream fp;
    fp << "seed=" << cfg.seed << ";m=" << cfg.subsequence_length << ";sampling=" << cfg.sampling_minutes
       << ";half_days=" << cfg.calendar.include_half_days << ";mcs=" << cfg.mcs_bootstrap << "/"
       << format_double(cfg.mcs_alpha) << ";epochs=" << cfg.fit.max_epochs << "/" << cfg.fit.patience << "/"
       << format_double(cfg.fit.adam.learning_rate) << ";xgb=" << cfg.fit.boost.rounds << "/"
       << cfg.fit.boost.max_depth << ";modes=";
    for (auto m : cfg.modes) fp << transfer::to_string(m) << ' ';
    fp << ";eps=";
    for (double e : cfg.epsilons) fp << format_double(e) << ' ';
    fp << ";models=";
    for (auto f : cfg.families) fp << models::to_string(f) << ' ';
    fp << ";sets=";
    for (auto k : cfg.predictor_sets) fp << data::to_string(k) << ' ';
    fp << ";targets=";
    for (const auto& t : cfg.targets) {
        fp << t.id << '@' << (t.listing_date ? format_date(*t.listing_date) : std::string("-")) << ' ';
    }
    fp << ";sources=";
    for (const auto& s : cfg.sources) fp << s.id << ' ';
    cfg.fingerprint = fp.str();
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    const auto dir = std::filesystem::absolute(path).parent_path();
    return parse_config(buf.str(), dir, path.string());
}

}  // namespace volxfer::config
