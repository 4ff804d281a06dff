#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "volxfer/common.h"

namespace volxfer::dtw {

// Ordered points of a shared dimension, stored row-major.
class Sequence {
public:
    Sequence() = default;
    // Throws ValidationError on ragged dimensions or non-finite coordinates.
    explicit Sequence(const std::vector<FeatureVector>& points);
    static Sequence scalar(std::span<const double> values);

    std::size_t size() const { return dim_ == 0 ? 0 : values_.size() / dim_; }
    std::size_t dim() const { return dim_; }
    bool empty() const { return values_.empty(); }

    std::span<const double> operator[](std::size_t i) const {
        return {values_.data() + i * dim_, dim_};
    }

private:
    std::vector<double> values_;
    std::size_t dim_ = 0;
};

// Euclidean distance. Throws ValidationError on a dimension mismatch.
double local_cost(std::span<const double> a, std::span<const double> b);

// Minimum total local cost over warping paths from (1,1) to (N,M) with steps
// (1,1), (1,0), (0,1). No global band. Two-row storage.
double dtw_distance(const Sequence& t, const Sequence& s);

// Full (N x M) accumulated-cost table, row-major; entry (N-1, M-1) equals
// dtw_distance. Memory is O(N*M), intended for inspection and debugging.
std::vector<double> accumulated_cost(const Sequence& t, const Sequence& s);

using WarpingPath = std::vector<std::pair<std::size_t, std::size_t>>;  // 0-based (i, j)

// Boundary, monotonicity and continuity conditions.
bool is_admissible(const WarpingPath& path, std::size_t n, std::size_t m);
double path_cost(const WarpingPath& path, const Sequence& t, const Sequence& s);

inline constexpr std::size_t kBruteForceMaxCells = 36;

// Enumerates every admissible warping path. Refuses (ValidationError) when
// N*M exceeds kBruteForceMaxCells.
double brute_force_dtw(const Sequence& t, const Sequence& s);

}  // namespace volxfer::dtw
