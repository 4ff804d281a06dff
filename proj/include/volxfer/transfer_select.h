#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "volxfer/data_pipeline.h"
#include "volxfer/dtw.h"

namespace volxfer::transfer {

// TO: target rows only. NP: target plus every aligned source row. MTL:
// target plus the DTW-selected source subsequences.
enum class Approach { TargetOnly, NaivePooling, MultiSource };

std::string_view to_string(Approach a);
Approach parse_approach(std::string_view name);

struct SelectionConfig {
    std::size_t m = 22;
    double epsilon = 50.0;  // percentile in (0, 100)
    Approach mode = Approach::MultiSource;

    void validate() const;
};

// m consecutive labeled rows of one source asset.
struct Subsequence {
    std::string asset_id;
    std::size_t start_index = 0;  // 1-based row position in the source data set
    std::vector<data::LabeledRow> rows;
    dtw::Sequence dtw_features;  // leading lagged-volatility columns of `rows`
};

// Splits a source data set of N rows into K = (N - e) / m disjoint windows of
// m rows, e = N mod m, dropping the e oldest rows. The DTW view keeps the first
// `volatility_columns` feature columns. N < m yields nothing.
std::vector<Subsequence> generate_subsequences(const data::SupervisedDataSet& source, std::size_t m,
                                               std::size_t volatility_columns);

struct SubsequenceCounts {
    std::size_t n = 0;
    std::size_t k = 0;
    std::size_t excess = 0;
};

struct SubsequenceUniverse {
    std::vector<std::shared_ptr<const Subsequence>> items;
    std::map<std::string, SubsequenceCounts> counts;
};

// Memoizes generate_subsequences by (asset, predictor kind, N, m); a source
// that grows by a few rows gets a new key, so shifted window starts are never
// served stale. Thread-safe.
class SubsequenceCache {
public:
    std::vector<std::shared_ptr<const Subsequence>> get(const data::SupervisedDataSet& source,
                                                        std::size_t m);
    std::size_t size() const;

private:
    using Key = std::tuple<std::string, data::PredictorKind, std::size_t, std::size_t>;
    mutable std::mutex mutex_;
    std::map<Key, std::vector<std::shared_ptr<const Subsequence>>> entries_;
};

SubsequenceUniverse build_universe(std::span<const data::SupervisedDataSet> sources, std::size_t m,
                                   SubsequenceCache* cache = nullptr);

struct RankedSubsequence {
    std::shared_ptr<const Subsequence> item;
    double distance = 0.0;
};

// Ascending DTW distance to the target window; ties broken by
// (asset_id, start_index). DTW calls fan out over `threads` workers.
std::vector<RankedSubsequence> rank_by_similarity(const dtw::Sequence& target_window,
                                                  const SubsequenceUniverse& universe,
                                                  std::size_t threads = 1);

// Items whose distance ranks at or below the epsilon-th percentile of the
// ranked distances: item i is kept iff #{j : d_j <= d_i} <= floor(eps * n / 100).
// Tied items enter or leave together. When nothing qualifies the first ranked
// item is returned alone.
std::vector<RankedSubsequence> select_by_percentile(const std::vector<RankedSubsequence>& ranked,
                                                    double epsilon);

// The last m feature rows dated on or before the origin (the origin's own
// unlabeled row included), restricted to the leading lagged-volatility
// columns. Fewer than m rows are returned as-is.
dtw::Sequence target_window(std::span<const data::FeatureRow> rows, Date origin, std::size_t m,
                            std::size_t volatility_columns);

struct AuditRow {
    Date origin;
    std::string asset_id;
    std::size_t start_index = 0;
    double distance = 0.0;
    bool selected = false;
};

inline constexpr const char* kAuditHeader = "origin,asset_id,start_index,distance,selected";

struct TrainingSet {
    data::SupervisedDataSet data;
    std::vector<AuditRow> audit;  // MTL only: one row per universe item
};

// Throws AlignmentError if any target or source row is labeled after `origin`.
void check_alignment(const data::SupervisedDataSet& data, Date origin);

// Pools the target training rows with source rows according to cfg.mode. For
// MTL the universe is ranked against `window` (required for MTL).
TrainingSet build_training_set(const data::SupervisedDataSet& target,
                               std::span<const data::SupervisedDataSet> sources,
                               const SelectionConfig& cfg, Date origin,
                               const std::optional<dtw::Sequence>& window = std::nullopt,
                               SubsequenceCache* cache = nullptr, std::size_t threads = 1);

// MTL pooling from an existing ranking, so several epsilons can share one
// ranking pass.
TrainingSet pool_selected(const data::SupervisedDataSet& target,
                          const std::vector<RankedSubsequence>& ranked, double epsilon, Date origin);

}  // namespace volxfer::transfer
