#include "volxfer/boosted.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "volxfer/rng.h"

namespace volxfer::models {

namespace {

struct SplitCandidate {
    double gain = 0.0;
    int feature = -1;
    double threshold = 0.0;
};

class TreeBuilder {
public:
    TreeBuilder(const data::SupervisedDataSet& data, const std::vector<double>& grad,
                const BoostConfig& cfg)
        : data_(data), grad_(grad), cfg_(cfg) {}

    RegressionTree build(std::vector<std::size_t> rows) {
        RegressionTree tree;
        grow(tree, std::move(rows), 0);
        return tree;
    }

private:
    int grow(RegressionTree& tree, std::vector<std::size_t> rows, std::size_t depth) {
        const int id = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        double g = 0.0;
        for (std::size_t r : rows) g += grad_[r];
        const double h = static_cast<double>(rows.size());
        {
            TreeNode& node = tree.nodes.back();
            node.sum_grad = g;
            node.sum_hess = h;
            node.count = rows.size();
            node.weight = optimal_leaf_weight(g, h, cfg_.lambda);
            node.value = -(cfg_.shrinkage * g) / (h + cfg_.lambda);
        }
        if (depth >= cfg_.max_depth || rows.size() < 2 * cfg_.min_instances_per_leaf) return id;

        const SplitCandidate best = best_split(rows, g, h);
        if (best.feature < 0 || !(best.gain > 0.0)) return id;

        std::vector<std::size_t> left, right;
        for (std::size_t r : rows) {
            (data_.rows[r].x[static_cast<std::size_t>(best.feature)] < best.threshold ? left : right).push_back(r);
        }
        rows.clear();
        rows.shrink_to_fit();
        const int l = grow(tree, std::move(left), depth + 1);
        const int r = grow(tree, std::move(right), depth + 1);
        TreeNode& node = tree.nodes[static_cast<std::size_t>(id)];
        node.feature = best.feature;
        node.threshold = best.threshold;
        node.left = l;
        node.right = r;
        node.gain = best.gain;
        return id;
    }

    SplitCandidate best_split(const std::vector<std::size_t>& rows, double g_total, double h_total) const {
        SplitCandidate best;
        const std::size_t width = data_.width();
        const std::size_t min_leaf = cfg_.min_instances_per_leaf;
        std::vector<std::size_t> sorted(rows);
        for (std::size_t f = 0; f < width; ++f) {
            std::stable_sort(sorted.begin(), sorted.end(), [&](std::size_t a, std::size_t b) {
                return data_.rows[a].x[f] < data_.rows[b].x[f];
            });
            double gl = 0.0;
            for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
                gl += grad_[sorted[i]];
                const double xi = data_.rows[sorted[i]].x[f];
                const double xn = data_.rows[sorted[i + 1]].x[f];
                if (!(xi < xn)) continue;
                const std::size_t n_left = i + 1;
                const std::size_t n_right = sorted.size() - n_left;
                if (n_left < min_leaf || n_right < min_leaf) continue;
                const double hl = static_cast<double>(n_left);
                const double gain = split_gain(gl, hl, g_total - gl, h_total - hl, cfg_.lambda, cfg_.gamma);
                if (best.feature < 0 || gain > best.gain) {
                    best = {gain, static_cast<int>(f), xi + (xn - xi) / 2.0};
                }
            }
        }
        return best;
    }

    const data::SupervisedDataSet& data_;
    const std::vector<double>& grad_;
    const BoostConfig& cfg_;
};

}  // namespace

double optimal_leaf_weight(double sum_grad, double sum_hess, double lambda) {
    return -sum_grad / (sum_hess + lambda);
}

double split_gain(double grad_left, double hess_left, double grad_right, double hess_right,
                  double lambda, double gamma) {
    const double g = grad_left + grad_right;
    const double h = hess_left + hess_right;
    return 0.5 * (grad_left * grad_left / (hess_left + lambda) +
                  grad_right * grad_right / (hess_right + lambda) - g * g / (h + lambda)) -
           gamma;
}

std::size_t RegressionTree::leaf_index(std::span<const double> x) const {
    std::size_t i = 0;
    while (!nodes[i].is_leaf()) {
        const TreeNode& n = nodes[i];
        i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] < n.threshold ? n.left : n.right);
    }
    return i;
}

double RegressionTree::predict(std::span<const double> x) const {
    return nodes.empty() ? 0.0 : nodes[leaf_index(x)].value;
}

std::size_t RegressionTree::depth() const {
    std::size_t deepest = 0;
    std::vector<std::pair<std::size_t, std::size_t>> stack;
    if (!nodes.empty()) stack.emplace_back(0, 0);
    while (!stack.empty()) {
        auto [i, d] = stack.back();
        stack.pop_back();
        deepest = std::max(deepest, d);
        if (!nodes[i].is_leaf()) {
            stack.emplace_back(static_cast<std::size_t>(nodes[i].left), d + 1);
            stack.emplace_back(static_cast<std::size_t>(nodes[i].right), d + 1);
        }
    }
    return deepest;
}

std::size_t RegressionTree::leaf_count() const {
    return static_cast<std::size_t>(
        std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

BoostedEnsemble::BoostedEnsemble(std::vector<RegressionTree> trees, double shrinkage,
                                 double base_score, std::size_t width)
    : trees_(std::move(trees)), shrinkage_(shrinkage), base_score_(base_score), width_(width) {}

double BoostedEnsemble::predict(std::span<const double> x) const {
    check_width(x, width_);
    double sum = 0.0;
    for (const auto& tree : trees_) sum += tree.predict(x);
    return base_score_ + sum;
}

nlohmann::json BoostedEnsemble::to_json() const {
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& tree : trees_) {
        nlohmann::json t;
        for (const char* key : {"feature", "threshold", "left", "right", "weight", "value"}) t[key] = nlohmann::json::array();
        for (const auto& n : tree.nodes) {
            t["feature"].push_back(n.feature);
            t["threshold"].push_back(n.threshold);
            t["left"].push_back(n.left);
            t["right"].push_back(n.right);
            t["weight"].push_back(n.weight);
            t["value"].push_back(n.value);
        }
        trees.push_back(std::move(t));
    }
    return {{"family", "XGB"},
            {"width", width_},
            {"base_score", base_score_},
            {"shrinkage", shrinkage_},
            {"trees", trees}};
}

BoostedEnsemble fit_boosted(const data::SupervisedDataSet& data, const FitConfig& cfg) {
    cfg.validate();
    const BoostConfig& bc = cfg.boost;
    if (data.empty()) throw FitError("XGB: empty training set");
    const std::size_t n = data.size();
    for (const auto& row : data.rows) {
        if (row.x.size() != data.width()) throw ValidationError("XGB: row width does not match the predictor set");
    }

    double base = 0.0;
    if (bc.base_score) {
        base = *bc.base_score;
    } else {
        for (const auto& row : data.rows) base += row.y;
        base /= static_cast<double>(n);
    }

    std::vector<double> pred(n, base);
    std::vector<double> grad(n);
    std::vector<RegressionTree> trees;
    auto engine = make_engine(cfg.seed, "xgb/subsample");
    const std::size_t sample_size =
        std::clamp<std::size_t>(static_cast<std::size_t>(std::llround(bc.subsample * static_cast<double>(n))), 1, n);
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), 0);

    for (std::size_t round = 0; round < bc.rounds; ++round) {
        for (std::size_t i = 0; i < n; ++i) grad[i] = pred[i] - data.rows[i].y;
        std::vector<std::size_t> rows;
        if (sample_size == n) {
            rows = all;
        } else {
            std::vector<std::size_t> perm = all;
            // partial Fisher-Yates
            for (std::size_t i = 0; i < sample_size; ++i) {
                std::uniform_int_distribution<std::size_t> pick(i, n - 1);
                std::swap(perm[i], perm[pick(engine)]);
            }
            rows.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(sample_size));
            std::sort(rows.begin(), rows.end());
        }
        TreeBuilder builder(data, grad, bc);
        RegressionTree tree = builder.build(std::move(rows));
        for (std::size_t i = 0; i < n; ++i) pred[i] += tree.predict(data.rows[i].x);
        trees.push_back(std::move(tree));
    }
    return BoostedEnsemble(std::move(trees), bc.shrinkage, base, data.width());
}

}  // namespace volxfer::models
