#include "volxfer/transfer_select.h"

#include <algorithm>
#include <cmath>
#include <set>

#include "volxfer/parallel.h"

namespace volxfer::transfer {

namespace {

bool provenance_less(const Subsequence& a, const Subsequence& b) {
    if (a.asset_id != b.asset_id) return a.asset_id < b.asset_id;
    return a.start_index < b.start_index;
}

std::string source_id(const data::SupervisedDataSet& source) {
    return source.empty() ? std::string{} : source.rows.front().asset;
}

}  // namespace

std::string_view to_string(Approach a) {
    switch (a) {
        case Approach::TargetOnly: return "TO";
        case Approach::NaivePooling: return "NP";
        case Approach::MultiSource: return "MTL";
    }
    return "?";
}

Approach parse_approach(std::string_view name) {
    if (name == "TO") return Approach::TargetOnly;
    if (name == "NP") return Approach::NaivePooling;
    if (name == "MTL") return Approach::MultiSource;
    throw ConfigError("unknown approach '" + std::string(name) + "'");
}

void SelectionConfig::validate() const {
    if (m < 1) throw ConfigError("subsequence length m must be >= 1");
    if (mode == Approach::MultiSource && !(epsilon > 0.0 && epsilon < 100.0)) {
        throw ConfigError("MTL epsilon must lie strictly between 0 and 100");
    }
}

std::vector<Subsequence> generate_subsequences(const data::SupervisedDataSet& source, std::size_t m,
                                               std::size_t volatility_columns) {
    if (m == 0) throw ValidationError("subsequence length m must be >= 1");
    std::vector<Subsequence> out;
    const std::size_t n = source.size();
    if (n < m) return out;
    const std::size_t excess = n % m;
    const std::size_t k = (n - excess) / m;
    out.reserve(k);
    for (std::size_t w = 0; w < k; ++w) {
        Subsequence sub;
        const std::size_t begin = excess + w * m;
        sub.asset_id = source.rows[begin].asset;
        sub.start_index = begin + 1;
        sub.rows.assign(source.rows.begin() + static_cast<std::ptrdiff_t>(begin),
                        source.rows.begin() + static_cast<std::ptrdiff_t>(begin + m));
        std::vector<FeatureVector> points;
        points.reserve(m);
        for (const auto& row : sub.rows) {
            if (row.x.size() < volatility_columns) {
                throw ValidationError("source row narrower than the DTW feature view");
            }
            points.emplace_back(row.x.begin(),
                                row.x.begin() + static_cast<std::ptrdiff_t>(volatility_columns));
        }
        sub.dtw_features = dtw::Sequence(points);
        out.push_back(std::move(sub));
    }
    return out;
}

std::vector<std::shared_ptr<const Subsequence>> SubsequenceCache::get(
    const data::SupervisedDataSet& source, std::size_t m) {
    Key key{source_id(source), source.kind, source.size(), m};
    {
        std::lock_guard lock(mutex_);
        if (auto it = entries_.find(key); it != entries_.end()) return it->second;
    }
    std::vector<std::shared_ptr<const Subsequence>> items;
    for (auto& sub : generate_subsequences(source, m, data::volatility_width(source.kind))) {
        items.push_back(std::make_shared<const Subsequence>(std::move(sub)));
    }
    std::lock_guard lock(mutex_);
    return entries_.emplace(std::move(key), std::move(items)).first->second;
}

std::size_t SubsequenceCache::size() const {
    std::lock_guard lock(mutex_);
    return entries_.size();
}

SubsequenceUniverse build_universe(std::span<const data::SupervisedDataSet> sources, std::size_t m,
                                   SubsequenceCache* cache) {
    SubsequenceUniverse universe;
    for (const auto& source : sources) {
        if (source.empty()) continue;
        std::vector<std::shared_ptr<const Subsequence>> items;
        if (cache != nullptr) {
            items = cache->get(source, m);
        } else {
            for (auto& sub : generate_subsequences(source, m, data::volatility_width(source.kind))) {
                items.push_back(std::make_shared<const Subsequence>(std::move(sub)));
            }
        }
        const std::size_t n = source.size();
        universe.counts[source_id(source)] = {n, items.size(), n % m};
        universe.items.insert(universe.items.end(), items.begin(), items.end());
    }
    return universe;
}

std::vector<RankedSubsequence> rank_by_similarity(const dtw::Sequence& target_window,
                                                  const SubsequenceUniverse& universe,
                                                  std::size_t threads) {
    std::vector<RankedSubsequence> ranked(universe.items.size());
    for (const auto& item : universe.items) {
        if (item->dtw_features.dim() != target_window.dim()) {
            throw ValidationError("target window and subsequence DTW features differ in dimension");
        }
    }
    parallel_for(universe.items.size(), threads, [&](std::size_t i) {
        ranked[i] = {universe.items[i], dtw::dtw_distance(target_window, universe.items[i]->dtw_features)};
    });
    std::sort(ranked.begin(), ranked.end(), [](const RankedSubsequence& a, const RankedSubsequence& b) {
        if (a.distance != b.distance) return a.distance < b.distance;
        return provenance_less(*a.item, *b.item);
    });
    return ranked;
}

std::vector<RankedSubsequence> select_by_percentile(const std::vector<RankedSubsequence>& ranked,
                                                    double epsilon) {
    std::vector<RankedSubsequence> selected;
    if (ranked.empty()) return selected;
    const std::size_t n = ranked.size();
    const auto allowed = static_cast<std::size_t>(std::floor(epsilon * static_cast<double>(n) / 100.0));
    // ranked is ascending, so #{j : d_j <= d_i} is the end of d_i's tie block.
    std::size_t i = 0;
    while (i < n) {
        std::size_t block_end = i;
        while (block_end < n && ranked[block_end].distance == ranked[i].distance) ++block_end;
        if (block_end > allowed) break;
        selected.insert(selected.end(), ranked.begin() + static_cast<std::ptrdiff_t>(i),
                        ranked.begin() + static_cast<std::ptrdiff_t>(block_end));
        i = block_end;
    }
    if (selected.empty()) selected.push_back(ranked.front());
    return selected;
}

dtw::Sequence target_window(std::span<const data::FeatureRow> rows, Date origin, std::size_t m,
                            std::size_t volatility_columns) {
    auto end = std::upper_bound(rows.begin(), rows.end(), origin,
                                [](Date d, const data::FeatureRow& r) { return d < r.date; });
    const auto available = static_cast<std::size_t>(end - rows.begin());
    const std::size_t take = std::min(m, available);
    std::vector<FeatureVector> points;
    for (auto it = end - static_cast<std::ptrdiff_t>(take); it != end; ++it) {
        if (it->x.size() < volatility_columns) {
            throw ValidationError("target row narrower than the DTW feature view");
        }
        points.emplace_back(it->x.begin(), it->x.begin() + static_cast<std::ptrdiff_t>(volatility_columns));
    }
    return dtw::Sequence(points);
}

void check_alignment(const data::SupervisedDataSet& data, Date origin) {
    for (const auto& row : data.rows) {
        if (row.label_date > origin) {
            throw AlignmentError("row of '" + row.asset + "' labeled " + format_date(row.label_date) +
                                 " is after the forecast origin " + format_date(origin));
        }
    }
}

TrainingSet pool_selected(const data::SupervisedDataSet& target,
                          const std::vector<RankedSubsequence>& ranked, double epsilon, Date origin) {
    TrainingSet out;
    out.data = target;
    const auto selected = select_by_percentile(ranked, epsilon);
    std::set<const Subsequence*> chosen;
    for (const auto& s : selected) chosen.insert(s.item.get());
    for (const auto& r : ranked) {
        const bool is_selected = chosen.contains(r.item.get());
        out.audit.push_back({origin, r.item->asset_id, r.item->start_index, r.distance, is_selected});
    }
    for (const auto& s : selected) {
        if (s.item->rows.empty()) continue;
        if (s.item->rows.back().label_date > origin) {
            throw AlignmentError("selected subsequence of '" + s.item->asset_id +
                                 "' extends past the forecast origin");
        }
        if (s.item->rows.front().x.size() != target.width()) {
            throw ValidationError("subsequence width differs from the target predictor set");
        }
        out.data.rows.insert(out.data.rows.end(), s.item->rows.begin(), s.item->rows.end());
    }
    return out;
}

TrainingSet build_training_set(const data::SupervisedDataSet& target,
                               std::span<const data::SupervisedDataSet> sources,
                               const SelectionConfig& cfg, Date origin,
                               const std::optional<dtw::Sequence>& window, SubsequenceCache* cache,
                               std::size_t threads) {
    cfg.validate();
    check_alignment(target, origin);
    for (const auto& source : sources) {
        check_alignment(source, origin);
        if (!source.empty() && source.kind != target.kind) {
            throw ValidationError("source and target predictor kinds differ");
        }
    }

    switch (cfg.mode) {
        case Approach::TargetOnly: {
            return {target, {}};
        }
        case Approach::NaivePooling: {
            TrainingSet out{target, {}};
            for (const auto& source : sources) {
                out.data.rows.insert(out.data.rows.end(), source.rows.begin(), source.rows.end());
            }
            return out;
        }
        case Approach::MultiSource: {
            if (!window || window->empty()) {
                throw ValidationError("MTL selection needs a non-empty target window");
            }
            const SubsequenceUniverse universe = build_universe(sources, cfg.m, cache);
            const auto ranked = rank_by_similarity(*window, universe, threads);
            return pool_selected(target, ranked, cfg.epsilon, origin);
        }
    }
    throw ConfigError("unknown approach");
}

}  // namespace volxfer::transfer
