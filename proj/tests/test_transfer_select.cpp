#include <catch_amalgamated.hpp>

#include <numeric>
#include <random>
#include <set>

#include "volxfer/transfer_select.h"

using namespace volxfer;
using namespace volxfer::transfer;
using namespace std::chrono;

namespace {

const Date kStart = parse_date("2020-01-01");

// n STD rows for `asset`; row i is labeled kStart + offset + i days and its
// features are level * (1 + i / 1000).
data::SupervisedDataSet rows_for(const std::string& asset, std::size_t n, double level, int offset = 0) {
    data::SupervisedDataSet ds;
    ds.kind = data::PredictorKind::Std;
    for (std::size_t i = 0; i < n; ++i) {
        const double v = level * (1.0 + static_cast<double>(i) / 1000.0);
        const Date label = kStart + days{offset + static_cast<int>(i)};
        ds.rows.push_back({{v, v, v}, v, asset, label - days{1}, label});
    }
    return ds;
}

RankedSubsequence ranked_item(const std::string& id, double d) {
    auto s = std::make_shared<Subsequence>();
    s->asset_id = id;
    s->start_index = 1;
    return {s, d};
}

std::vector<RankedSubsequence> ranked_list(const std::vector<double>& d) {
    std::vector<RankedSubsequence> out;
    for (std::size_t i = 0; i < d.size(); ++i) out.push_back(ranked_item("S" + std::to_string(i), d[i]));
    return out;
}

std::vector<double> distances(const std::vector<RankedSubsequence>& items) {
    std::vector<double> out;
    for (const auto& r : items) out.push_back(r.distance);
    return out;
}

}  // namespace

TEST_CASE("subsequence windows drop the oldest excess rows", "[transfer]") {
    const auto subs = generate_subsequences(rows_for("A", 100, 1.0), 22, 3);
    REQUIRE(subs.size() == 4);
    std::vector<std::size_t> starts;
    for (const auto& s : subs) starts.push_back(s.start_index);
    CHECK(starts == std::vector<std::size_t>{13, 35, 57, 79});
    CHECK(subs[0].rows.front().label_date == kStart + days{12});
    CHECK(subs[3].rows.back().label_date == kStart + days{99});
    CHECK(subs[0].dtw_features.size() == 22);
    CHECK(subs[0].dtw_features.dim() == 3);

    CHECK(generate_subsequences(rows_for("A", 22, 1.0), 22, 3).size() == 1);
    CHECK(generate_subsequences(rows_for("A", 21, 1.0), 22, 3).empty());
    CHECK(generate_subsequences(rows_for("A", 30, 1.0), 22, 1)[0].dtw_features.dim() == 1);
}

TEST_CASE("subsequence partition holds for random sizes", "[transfer][property]") {
    std::mt19937_64 rng(17);
    for (int rep = 0; rep < 300; ++rep) {
        const std::size_t n = rng() % 400;
        const std::size_t m = 1 + rng() % 40;
        const auto subs = generate_subsequences(rows_for("A", n, 1.0), m, 3);
        const std::size_t k = subs.size();
        const std::size_t e = n - k * m;
        CHECK(e < m);
        std::set<Date> seen;
        for (std::size_t i = 0; i < k; ++i) {
            CHECK(subs[i].rows.size() == m);
            CHECK(subs[i].start_index == e + i * m + 1);
            for (const auto& row : subs[i].rows) CHECK(seen.insert(row.label_date).second);
        }
        if (k > 0) CHECK(subs.back().rows.back().label_date == kStart + days{static_cast<int>(n) - 1});
    }
}

TEST_CASE("percentile selection", "[transfer]") {
    const auto ranked = ranked_list({1, 2, 3, 4});
    CHECK(distances(select_by_percentile(ranked, 25)) == std::vector<double>{1});
    CHECK(distances(select_by_percentile(ranked, 50)) == std::vector<double>{1, 2});
    CHECK(distances(select_by_percentile(ranked, 75)) == std::vector<double>{1, 2, 3});
    CHECK(distances(select_by_percentile(ranked, 99)) == std::vector<double>{1, 2, 3});

    // Ties enter together; a tie block larger than the allowance falls back
    // to the first ranked item.
    const auto tied = ranked_list({1, 1, 2, 3});
    CHECK(distances(select_by_percentile(tied, 50)) == std::vector<double>{1, 1});
    REQUIRE(select_by_percentile(tied, 25).size() == 1);
    CHECK(select_by_percentile(tied, 25)[0].item->asset_id == "S0");
    CHECK(select_by_percentile(ranked_list({5}), 50).size() == 1);
    CHECK(select_by_percentile(ranked_list({2, 2, 2, 2}), 50).size() == 1);
    std::vector<double> hundred(100), two_hundred(200);
    std::iota(hundred.begin(), hundred.end(), 1.0);
    std::iota(two_hundred.begin(), two_hundred.end(), 1.0);
    CHECK(select_by_percentile(ranked_list(hundred), 25).size() == 25);
    CHECK(select_by_percentile(ranked_list(two_hundred), 75).size() == 150);
    CHECK(select_by_percentile({}, 50).empty());

    std::mt19937_64 rng(5);
    for (int rep = 0; rep < 100; ++rep) {
        std::vector<double> d(1 + rng() % 50);
        for (double& v : d) v = static_cast<double>(rng() % 10);
        std::sort(d.begin(), d.end());
        const auto items = ranked_list(d);
        std::size_t previous = 0;
        for (double eps : {5.0, 25.0, 50.0, 75.0, 95.0}) {
            const auto sel = select_by_percentile(items, eps);
            CHECK(sel.size() >= previous);
            previous = sel.size();
        }
    }
}

TEST_CASE("training set sizes for each approach", "[transfer]") {
    const Date origin = kStart + days{200};
    const auto target = rows_for("T", 28, 1.0, 100);
    std::vector<data::SupervisedDataSet> sources{rows_for("S1", 100, 1.0), rows_for("S2", 100, 2.0),
                                                 rows_for("S3", 100, 3.0)};
    SelectionConfig cfg;
    cfg.mode = Approach::TargetOnly;
    CHECK(build_training_set(target, sources, cfg, origin).data.size() == 28);
    cfg.mode = Approach::NaivePooling;
    CHECK(build_training_set(target, sources, cfg, origin).data.size() == 328);

    std::vector<data::SupervisedDataSet> two{sources[0], sources[1]};
    cfg.mode = Approach::MultiSource;
    cfg.epsilon = 25;
    std::vector<FeatureVector> window(22, FeatureVector{1.05, 1.05, 1.05});
    const auto mtl = build_training_set(target, two, cfg, origin, dtw::Sequence(window));
    CHECK(mtl.data.size() == 72);
    CHECK(mtl.audit.size() == 8);
    std::size_t chosen = 0;
    for (const auto& a : mtl.audit) {
        if (a.selected) {
            ++chosen;
            CHECK(a.asset_id == "S1");  // level 1.0 is closer than 2.0
        }
    }
    CHECK(chosen == 2);

    CHECK_THROWS_AS(build_training_set(target, two, cfg, origin), ValidationError);
}

TEST_CASE("rows labeled after the origin are rejected", "[transfer]") {
    const auto target = rows_for("T", 28, 1.0);
    CHECK_NOTHROW(check_alignment(target, kStart + days{27}));
    CHECK_THROWS_AS(check_alignment(target, kStart + days{26}), AlignmentError);

    std::vector<data::SupervisedDataSet> late{rows_for("S1", 100, 1.0, 50)};
    SelectionConfig cfg;
    cfg.mode = Approach::NaivePooling;
    CHECK_THROWS_AS(build_training_set(target, late, cfg, kStart + days{100}), AlignmentError);
}

TEST_CASE("target window and ranking order", "[transfer]") {
    std::vector<data::FeatureRow> rows;
    for (int i = 0; i < 30; ++i) rows.push_back({static_cast<std::size_t>(i + 1), kStart + days{i}, {1.0 * i, 2.0, 3.0}, {}});
    const auto w = target_window(rows, kStart + days{25}, 22, 2);
    REQUIRE(w.size() == 22);
    CHECK(w.dim() == 2);
    CHECK(w[21][0] == 25.0);
    CHECK(w[0][0] == 4.0);
    CHECK(target_window(rows, kStart + days{5}, 22, 1).size() == 6);

    // Equal distances break ties by (asset, start index).
    std::vector<data::SupervisedDataSet> sources{rows_for("B", 44, 1.0), rows_for("A", 44, 1.0)};
    const auto universe = build_universe(sources, 22);
    CHECK(universe.counts.at("A").k == 2);
    std::vector<FeatureVector> flat(22, FeatureVector{0.0, 0.0, 0.0});
    const auto ranked = rank_by_similarity(dtw::Sequence(flat), universe, 2);
    REQUIRE(ranked.size() == 4);
    CHECK(ranked[0].item->asset_id == "A");
    CHECK(ranked[0].item->start_index == 1);
    CHECK(ranked[1].item->asset_id == "B");
    CHECK(ranked[1].item->start_index == 1);
    for (std::size_t i = 1; i < ranked.size(); ++i) CHECK(ranked[i - 1].distance <= ranked[i].distance);
}

TEST_CASE("cache serves identical windows and re-keys on growth", "[transfer]") {
    SubsequenceCache cache;
    const auto a = cache.get(rows_for("A", 100, 1.0), 22);
    const auto b = cache.get(rows_for("A", 100, 1.0), 22);
    CHECK(a[0].get() == b[0].get());
    const auto grown = cache.get(rows_for("A", 103, 1.0), 22);
    CHECK(grown[0]->start_index == 16);
    CHECK(cache.size() == 2);
}
