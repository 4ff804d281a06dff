#include "volxfer/har.h"

#include <cmath>

namespace volxfer::models {

HarModel::HarModel(Eigen::VectorXd coefficients) : coefficients_(std::move(coefficients)) {
    if (coefficients_.size() < 1) throw ValidationError("HAR model needs an intercept");
}

double HarModel::predict(std::span<const double> x) const {
    check_width(x, width());
    double y = coefficients_[0];
    for (std::size_t k = 0; k < x.size(); ++k) {
        y += coefficients_[static_cast<Eigen::Index>(k) + 1] * x[k];
    }
    return y;
}

nlohmann::json HarModel::to_json() const {
    return {{"family", "HAR"},
            {"width", width()},
            {"coefficients", std::vector<double>(coefficients_.begin(), coefficients_.end())},
            {"ridge_fallback", used_ridge_}};
}

HarModel fit_har(const data::SupervisedDataSet& data) {
    if (data.empty()) throw FitError("HAR: empty training set");
    const auto n = static_cast<Eigen::Index>(data.size());
    const auto p = static_cast<Eigen::Index>(data.width()) + 1;

    Eigen::MatrixXd x(n, p);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& row = data.rows[static_cast<std::size_t>(i)];
        if (static_cast<Eigen::Index>(row.x.size()) + 1 != p) {
            throw ValidationError("HAR: row width does not match the predictor set");
        }
        x(i, 0) = 1.0;
        for (Eigen::Index k = 1; k < p; ++k) x(i, k) = row.x[static_cast<std::size_t>(k - 1)];
        y[i] = row.y;
    }

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
    Eigen::VectorXd beta;
    bool ridge = false;
    if (qr.rank() == p) {
        beta = qr.solve(y);
    } else {
        Eigen::MatrixXd gram = x.transpose() * x;
        const double scale = gram.diagonal().mean();
        gram.diagonal().array() += kRidgeFallback * (scale > 0.0 ? scale : 1.0);
        Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
        if (ldlt.info() != Eigen::Success) throw FitError("HAR: ridge fallback failed to factorize");
        beta = ldlt.solve(x.transpose() * y);
        ridge = true;
    }
    if (!beta.allFinite()) throw FitError("HAR: non-finite coefficients");

    HarModel model(std::move(beta));
    model.used_ridge_ = ridge;
    return model;
}

}  // namespace volxfer::models
