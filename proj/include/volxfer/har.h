#pragma once

#include <Eigen/Dense>

#include "volxfer/models.h"

namespace volxfer::models {

// Linear HAR regression: intercept followed by one weight per feature column.
class HarModel final : public Regressor {
public:
    explicit HarModel(Eigen::VectorXd coefficients);

    Family family() const override { return Family::Har; }
    std::size_t width() const override { return static_cast<std::size_t>(coefficients_.size()) - 1; }
    double predict(std::span<const double> x) const override;
    nlohmann::json to_json() const override;

    const Eigen::VectorXd& coefficients() const { return coefficients_; }
    bool used_ridge() const { return used_ridge_; }

private:
    friend HarModel fit_har(const data::SupervisedDataSet& data);
    Eigen::VectorXd coefficients_;
    bool used_ridge_ = false;
};

// Relative size of the ridge term added to X'X when the design is rank
// deficient (scaled by the mean diagonal of X'X).
inline constexpr double kRidgeFallback = 1e-8;

// Ordinary least squares via column-pivoted QR. A rank-deficient design falls
// back to the ridge-stabilized normal equations; FitError if that also fails
// or the data set is empty.
HarModel fit_har(const data::SupervisedDataSet& data);

}  // namespace volxfer::models
