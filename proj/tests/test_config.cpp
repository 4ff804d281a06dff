#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "volxfer/config.h"

using namespace volxfer;
using namespace volxfer::config;

namespace {

struct Fixture {
    std::filesystem::path dir = std::filesystem::temp_directory_path() / "volxfer_config_test";

    Fixture() {
        std::filesystem::create_directories(dir);
        for (const char* f : {"us3m.csv", "hsi.csv", "ads.csv", "epu.csv", "vix.csv", "t.csv", "s.csv"}) {
            std::ofstream(dir / f) << "x\n";
        }
    }
    ~Fixture() { std::filesystem::remove_all(dir); }
};

const std::string kBase = R"(# experiment
seed = 42
output_dir = "out"
threads = 2
epsilons = [25, 50,
            75]
models = ["HAR", "XGB"]
periods = [50, 150]

[macro]
us3m = "us3m.csv"
hsi = "hsi.csv"
ads = "ads.csv"
epu = "epu.csv"
vix = "vix.csv"

[xgb]
rounds = 12

[[target]]
id = "T"
path = "t.csv"
listing_date = "2014-03-03"

[[source]]
id = "S"
path = "s.csv"
)";

}  // namespace

TEST_CASE("TOML subset parsing", "[config]") {
    const auto doc = parse_toml("a = 1\nb = 2.5\nc = \"x # y\" # note\nd = [true, false]\n[t]\ne = -3\n[[arr]]\nf = 1\n[[arr]]\nf = 2\n");
    CHECK(std::get<std::int64_t>(doc.root.values.at("a").data) == 1);
    CHECK(std::get<double>(doc.root.values.at("b").data) == 2.5);
    CHECK(std::get<std::string>(doc.root.values.at("c").data) == "x # y");
    CHECK(std::get<Array>(doc.root.values.at("d").data).size() == 2);
    CHECK(std::get<std::int64_t>(doc.tables.at("t").values.at("e").data) == -3);
    CHECK(doc.table_arrays.at("arr").size() == 2);
    CHECK(doc.root.values.at("d").line == 4);

    try {
        parse_toml("a = 1\nb = [1, 2\n", "bad.toml");
        FAIL("unterminated array accepted");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).rfind("bad.toml:2", 0) == 0);
    }
    CHECK_THROWS_AS(parse_toml("a = 1\na = 2\n"), ConfigError);
    CHECK_THROWS_AS(parse_toml("a = \n"), ConfigError);
    CHECK_THROWS_AS(parse_toml("[t\n"), ConfigError);
}

TEST_CASE("experiment config with defaults", "[config]") {
    Fixture fx;
    const auto cfg = parse_config(kBase, fx.dir, "exp.toml");
    CHECK(cfg.seed == 42);
    CHECK(cfg.threads == 2);
    CHECK(cfg.output_dir == fx.dir / "out");
    CHECK(cfg.epsilons == std::vector<double>{25, 50, 75});
    CHECK(cfg.families.size() == 2);
    CHECK(cfg.periods == std::vector<std::size_t>{50, 150});
    CHECK(cfg.fit.boost.rounds == 12);
    CHECK(cfg.targets.size() == 1);
    CHECK(cfg.targets[0].listing_date == parse_date("2014-03-03"));
    CHECK(cfg.sample_periods().size() == 2 + cfg.scarcity_periods.size());
    CHECK(cfg.subsequence_length == 22);
    CHECK_FALSE(cfg.fingerprint.empty());

    auto other = kBase;
    other.replace(other.find("seed = 42"), 9, "seed = 43");
    CHECK(parse_config(other, fx.dir).fingerprint != cfg.fingerprint);
}

TEST_CASE("config errors name the line", "[config]") {
    Fixture fx;
    auto expect_error = [&](std::string text, const std::string& needle) {
        try {
            parse_config(text, fx.dir, "exp.toml");
            FAIL("accepted: " << needle);
        } catch (const ConfigError& e) {
            INFO(e.what());
            CHECK(std::string(e.what()).find(needle) != std::string::npos);
        }
    };
    auto with = [&](const std::string& from, const std::string& to) {
        auto text = kBase;
        text.replace(text.find(from), from.size(), to);
        return text;
    };
    expect_error(with("threads = 2", "threadz = 2"), "exp.toml:4");
    expect_error(with("periods = [50, 150]", "periods = [50, 10]"), "exp.toml:8");
    expect_error(with("epsilons = [25, 50,", "epsilons = [0, 50,"), "exp.toml:5");
    expect_error(with("vix = \"vix.csv\"", "vix = \"nope.csv\""), "exp.toml:15");
    expect_error(with("seed = 42\n", ""), "seed");
    expect_error(with("id = \"S\"", "id = \"T\""), "exp.toml:");
    expect_error(with("models = [\"HAR\", \"XGB\"]", "models = [\"HAR\", \"RNN\"]"), "exp.toml:7");
}
