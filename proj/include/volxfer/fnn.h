#pragma once

#include <array>
#include <vector>

#include <Eigen/Dense>

#include "volxfer/models.h"

namespace volxfer::models {

inline constexpr std::array<Eigen::Index, 3> kHiddenWidths{8, 4, 2};
inline constexpr std::size_t kLayers = 4;  // three ReLU layers + identity output

class DivergenceError : public FitError {
public:
    using FitError::FitError;
};

struct FnnGradients {
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> biases;
};

// Feedforward network width -> 8 -> 4 -> 2 -> 1 over z-scored inputs.
// weights[l] has shape (units_l x units_{l-1}).
struct FnnModel final : public Regressor {
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> biases;
    Eigen::VectorXd mean;
    Eigen::VectorXd stddev;
    std::size_t trained_epochs = 0;

    // Scaled-uniform weights (limit sqrt(6 / fan_in)), zero biases, identity
    // normalization.
    static FnnModel initialize(std::size_t width, std::uint64_t seed);

    Family family() const override { return Family::Fnn; }
    std::size_t width() const override { return static_cast<std::size_t>(mean.size()); }
    double predict(std::span<const double> x) const override;
    nlohmann::json to_json() const override;

    Eigen::RowVectorXd normalize(std::span<const double> x) const;
    // Output for each row of already-normalized inputs.
    Eigen::VectorXd forward(const Eigen::MatrixXd& normalized) const;
    // Mean squared error over the rows and its gradient by backpropagation.
    double loss_and_gradient(const Eigen::MatrixXd& normalized, const Eigen::VectorXd& y,
                             FnnGradients* grad) const;
};

// Chronologically last validation_fraction of rows held out (by label date);
// z-score statistics from the training part only; ADAM on shuffled
// mini-batches; early stopping on validation MSE with the best weights
// restored. Without a validation split (fewer than min_rows_for_validation
// rows) or with cfg.fixed_epochs set, trains a fixed number of epochs.
FnnModel fit_fnn(const data::SupervisedDataSet& data, const FitConfig& cfg);

}  // namespace volxfer::models
