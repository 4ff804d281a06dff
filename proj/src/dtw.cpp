#include "volxfer/dtw.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace volxfer::dtw {

namespace {

void check_inputs(const Sequence& t, const Sequence& s) {
    if (t.empty() || s.empty()) throw ValidationError("dtw: empty sequence");
    if (t.dim() != s.dim()) {
        throw ValidationError("dtw: dimension mismatch " + std::to_string(t.dim()) + " vs " +
                              std::to_string(s.dim()));
    }
}

void enumerate(const Sequence& t, const Sequence& s, std::size_t i, std::size_t j, double prefix,
               double& best) {
    if (i + 1 == t.size() && j + 1 == s.size()) {
        best = std::min(best, prefix);
        return;
    }
    if (i + 1 < t.size() && j + 1 < s.size()) {
        enumerate(t, s, i + 1, j + 1, prefix + local_cost(t[i + 1], s[j + 1]), best);
    }
    if (i + 1 < t.size()) enumerate(t, s, i + 1, j, prefix + local_cost(t[i + 1], s[j]), best);
    if (j + 1 < s.size()) enumerate(t, s, i, j + 1, prefix + local_cost(t[i], s[j + 1]), best);
}

}  // namespace

Sequence::Sequence(const std::vector<FeatureVector>& points) {
    if (points.empty()) return;
    dim_ = points.front().size();
    if (dim_ == 0) throw ValidationError("sequence points must have dimension >= 1");
    values_.reserve(points.size() * dim_);
    for (const auto& p : points) {
        if (p.size() != dim_) throw ValidationError("sequence points have differing dimensions");
        for (double v : p) {
            if (!std::isfinite(v)) throw ValidationError("sequence coordinate is not finite");
            values_.push_back(v);
        }
    }
}

Sequence Sequence::scalar(std::span<const double> values) {
    std::vector<FeatureVector> points;
    points.reserve(values.size());
    for (double v : values) points.push_back({v});
    return Sequence(points);
}

double local_cost(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw ValidationError("local_cost: dimension mismatch");
    double sum = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double d = a[k] - b[k];
        sum += d * d;
    }
    return std::sqrt(sum);
}

double dtw_distance(const Sequence& t, const Sequence& s) {
    check_inputs(t, s);
    const std::size_t n = t.size();
    const std::size_t m = s.size();
    std::vector<double> prev(m), curr(m);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            const double c = local_cost(t[i], s[j]);
            if (i == 0 && j == 0) {
                curr[j] = c;
            } else if (i == 0) {
                curr[j] = c + curr[j - 1];
            } else if (j == 0) {
                curr[j] = c + prev[j];
            } else {
                curr[j] = c + std::min({prev[j - 1], prev[j], curr[j - 1]});
            }
        }
        std::swap(prev, curr);
    }
    return prev[m - 1];
}

std::vector<double> accumulated_cost(const Sequence& t, const Sequence& s) {
    check_inputs(t, s);
    const std::size_t n = t.size();
    const std::size_t m = s.size();
    std::vector<double> d(n * m);
    auto at = [&](std::size_t i, std::size_t j) -> double& { return d[i * m + j]; };
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            const double c = local_cost(t[i], s[j]);
            if (i == 0 && j == 0) {
                at(i, j) = c;
            } else if (i == 0) {
                at(i, j) = c + at(i, j - 1);
            } else if (j == 0) {
                at(i, j) = c + at(i - 1, j);
            } else {
                at(i, j) = c + std::min({at(i - 1, j - 1), at(i - 1, j), at(i, j - 1)});
            }
        }
    }
    return d;
}

bool is_admissible(const WarpingPath& path, std::size_t n, std::size_t m) {
    if (path.empty() || n == 0 || m == 0) return false;
    if (path.front() != std::pair<std::size_t, std::size_t>{0, 0}) return false;
    if (path.back() != std::pair<std::size_t, std::size_t>{n - 1, m - 1}) return false;
    for (std::size_t l = 1; l < path.size(); ++l) {
        const auto [i0, j0] = path[l - 1];
        const auto [i1, j1] = path[l];
        if (i1 < i0 || j1 < j0) return false;
        const std::size_t di = i1 - i0;
        const std::size_t dj = j1 - j0;
        if (di > 1 || dj > 1 || (di == 0 && dj == 0)) return false;
    }
    return true;
}

double path_cost(const WarpingPath& path, const Sequence& t, const Sequence& s) {
    double total = 0.0;
    for (const auto& [i, j] : path) total += local_cost(t[i], s[j]);
    return total;
}

double brute_force_dtw(const Sequence& t, const Sequence& s) {
    check_inputs(t, s);
    if (t.size() * s.size() > kBruteForceMaxCells) {
        throw ValidationError("brute_force_dtw: N*M = " + std::to_string(t.size() * s.size()) +
                              " exceeds the enumeration limit of " +
                              std::to_string(kBruteForceMaxCells));
    }
    double best = std::numeric_limits<double>::infinity();
    enumerate(t, s, 0, 0, local_cost(t[0], s[0]), best);
    return best;
}

}  // namespace volxfer::dtw
