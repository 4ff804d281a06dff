#pragma once

#include <vector>

#include "volxfer/models.h"

namespace volxfer::models {

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;  // x[feature] < threshold goes left
    int left = -1;
    int right = -1;
    double weight = 0.0;  // -G / (H + lambda)
    double value = 0.0;   // leaf output after shrinkage, -(eta G) / (H + lambda)
    // Fit-time statistics over the node's (subsampled) training rows.
    double sum_grad = 0.0;
    double sum_hess = 0.0;
    std::size_t count = 0;
    double gain = 0.0;  // split gain for internal nodes

    bool is_leaf() const { return feature < 0; }
};

struct RegressionTree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root

    double predict(std::span<const double> x) const;
    std::size_t depth() const;
    std::size_t leaf_count() const;
    // Index of the leaf that x falls into.
    std::size_t leaf_index(std::span<const double> x) const;
};

// Newton-boosted regression trees under l = (y - yhat)^2 / 2, so each row has
// gradient yhat - y and hessian 1.
class BoostedEnsemble final : public Regressor {
public:
    BoostedEnsemble(std::vector<RegressionTree> trees, double shrinkage, double base_score,
                    std::size_t width);

    Family family() const override { return Family::Boosted; }
    std::size_t width() const override { return width_; }
    // base_score + sum of the trees' shrunken leaf values
    double predict(std::span<const double> x) const override;
    nlohmann::json to_json() const override;

    const std::vector<RegressionTree>& trees() const { return trees_; }
    double shrinkage() const { return shrinkage_; }
    double base_score() const { return base_score_; }

private:
    std::vector<RegressionTree> trees_;
    double shrinkage_ = 0.1;
    double base_score_ = 0.0;
    std::size_t width_ = 0;
};

// -G / (H + lambda)
double optimal_leaf_weight(double sum_grad, double sum_hess, double lambda);

// 1/2 [GL^2/(HL+lambda) + GR^2/(HR+lambda) - (GL+GR)^2/(HL+HR+lambda)] - gamma
double split_gain(double grad_left, double hess_left, double grad_right, double hess_right,
                  double lambda, double gamma);

// cfg.boost.rounds trees, each grown depth-first by exact greedy search over
// midpoints of consecutive distinct feature values on a seeded row subsample.
// A split is kept only when its gain is positive.
BoostedEnsemble fit_boosted(const data::SupervisedDataSet& data, const FitConfig& cfg);

}  // namespace volxfer::models
