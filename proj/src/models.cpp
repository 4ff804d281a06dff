#include "volxfer/models.h"

#include <cmath>
#include <string>

#include "volxfer/boosted.h"
#include "volxfer/fnn.h"
#include "volxfer/har.h"

namespace volxfer::models {

std::string_view to_string(Family f) {
    switch (f) {
        case Family::Har: return "HAR";
        case Family::Fnn: return "FNN";
        case Family::Boosted: return "XGB";
    }
    throw ValidationError("unknown model family");
}

Family parse_family(std::string_view name) {
    if (name == "HAR") return Family::Har;
    if (name == "FNN") return Family::Fnn;
    if (name == "XGB") return Family::Boosted;
    throw ValidationError("unknown model family '" + std::string(name) + "'");
}

void FitConfig::validate() const {
    if (batch_size == 0) throw ValidationError("batch_size must be positive");
    if (max_epochs == 0) throw ValidationError("max_epochs must be positive");
    if (fixed_epochs && *fixed_epochs == 0) throw ValidationError("fixed_epochs must be positive");
    if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
        throw ValidationError("validation_fraction must lie in (0, 1)");
    }
    if (!(adam.learning_rate > 0.0)) throw ValidationError("learning rate must be positive");
    if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0) || !(adam.beta2 >= 0.0 && adam.beta2 < 1.0)) {
        throw ValidationError("ADAM decay rates must lie in [0, 1)");
    }
    if (!(adam.epsilon > 0.0)) throw ValidationError("ADAM epsilon must be positive");
    if (boost.rounds == 0) throw ValidationError("boosting rounds must be positive");
    if (!(boost.shrinkage > 0.0 && boost.shrinkage <= 1.0)) throw ValidationError("shrinkage must lie in (0, 1]");
    if (!(boost.gamma >= 0.0)) throw ValidationError("gamma must be non-negative");
    if (!(boost.lambda >= 0.0)) throw ValidationError("lambda must be non-negative");
    if (boost.alpha != 0.0) throw ValidationError("L1 leaf regularization (alpha) is not supported");
    if (!(boost.subsample > 0.0 && boost.subsample <= 1.0)) throw ValidationError("subsample must lie in (0, 1]");
    if (boost.min_instances_per_leaf == 0) throw ValidationError("min_instances_per_leaf must be positive");
    if (boost.base_score && !std::isfinite(*boost.base_score)) throw ValidationError("base_score must be finite");
}

RegressorPtr fit(Family family, const data::SupervisedDataSet& data, const FitConfig& cfg) {
    switch (family) {
        case Family::Har: return std::make_shared<HarModel>(fit_har(data));
        case Family::Fnn: return std::make_shared<FnnModel>(fit_fnn(data, cfg));
        case Family::Boosted: return std::make_shared<BoostedEnsemble>(fit_boosted(data, cfg));
    }
    throw ValidationError("unknown model family");
}

namespace {

Eigen::VectorXd to_vector(const nlohmann::json& j) {
    const auto v = j.get<std::vector<double>>();
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

RegressorPtr har_from_json(const nlohmann::json& j) {
    return std::make_shared<HarModel>(to_vector(j.at("coefficients")));
}

RegressorPtr fnn_from_json(const nlohmann::json& j) {
    auto model = std::make_shared<FnnModel>();
    const auto& layers = j.at("layers");
    if (layers.size() != kLayers) throw ValidationError("FNN snapshot: wrong layer count");
    for (const auto& layer : layers) {
        const auto rows = layer.at("weights").get<std::vector<std::vector<double>>>();
        const auto cols = rows.empty() ? 0 : rows.front().size();
        Eigen::MatrixXd w(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i].size() != cols) throw ValidationError("FNN snapshot: ragged weight matrix");
            for (std::size_t k = 0; k < cols; ++k) w(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
        }
        Eigen::VectorXd b = to_vector(layer.at("biases"));
        if (b.size() != w.rows()) throw ValidationError("FNN snapshot: bias size mismatch");
        if (!model->weights.empty() && w.cols() != model->weights.back().rows()) {
            throw ValidationError("FNN snapshot: layer shapes do not chain");
        }
        model->weights.push_back(std::move(w));
        model->biases.push_back(std::move(b));
    }
    model->mean = to_vector(j.at("mean"));
    model->stddev = to_vector(j.at("stddev"));
    if (model->mean.size() != model->weights.front().cols() || model->stddev.size() != model->mean.size()) {
        throw ValidationError("FNN snapshot: normalization size mismatch");
    }
    model->trained_epochs = j.value("trained_epochs", std::size_t{0});
    return model;
}

RegressorPtr boosted_from_json(const nlohmann::json& j) {
    std::vector<RegressionTree> trees;
    for (const auto& t : j.at("trees")) {
        const auto feature = t.at("feature").get<std::vector<int>>();
        const auto threshold = t.at("threshold").get<std::vector<double>>();
        const auto left = t.at("left").get<std::vector<int>>();
        const auto right = t.at("right").get<std::vector<int>>();
        const auto weight = t.at("weight").get<std::vector<double>>();
        const auto value = t.at("value").get<std::vector<double>>();
        const std::size_t n = feature.size();
        if (threshold.size() != n || left.size() != n || right.size() != n || weight.size() != n ||
            value.size() != n) {
            throw ValidationError("XGB snapshot: node arrays differ in length");
        }
        RegressionTree tree;
        for (std::size_t i = 0; i < n; ++i) {
            TreeNode node;
            node.feature = feature[i];
            node.threshold = threshold[i];
            node.left = left[i];
            node.right = right[i];
            node.weight = weight[i];
            node.value = value[i];
            if (!node.is_leaf()) {
                auto bad = [&](int c) { return c <= static_cast<int>(i) || c >= static_cast<int>(n); };
                if (bad(node.left) || bad(node.right)) throw ValidationError("XGB snapshot: invalid child index");
            }
            tree.nodes.push_back(node);
        }
        trees.push_back(std::move(tree));
    }
    return std::make_shared<BoostedEnsemble>(std::move(trees), j.at("shrinkage").get<double>(),
                                             j.at("base_score").get<double>(), j.at("width").get<std::size_t>());
}

}  // namespace

RegressorPtr from_json(const nlohmann::json& snapshot) {
    try {
        switch (parse_family(snapshot.at("family").get<std::string>())) {
            case Family::Har: return har_from_json(snapshot);
            case Family::Fnn: return fnn_from_json(snapshot);
            case Family::Boosted: return boosted_from_json(snapshot);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed model snapshot: ") + e.what());
    }
    throw ValidationError("unknown model family");
}

double clamp_forecast(double prediction, double training_min_rv) {
    return prediction >= 0.0 ? prediction : training_min_rv;
}

void check_width(std::span<const double> x, std::size_t expected) {
    if (x.size() != expected) {
        throw ValidationError("predictor width " + std::to_string(x.size()) + " does not match model width " +
                              std::to_string(expected));
    }
}

}  // namespace volxfer::models
