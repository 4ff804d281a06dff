#include "volxfer/fnn.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "volxfer/rng.h"

namespace volxfer::models {

namespace {

struct AdamState {
    std::vector<Eigen::MatrixXd> mw, vw;
    std::vector<Eigen::VectorXd> mb, vb;
    std::size_t step = 0;

    explicit AdamState(const FnnModel& model) {
        for (std::size_t l = 0; l < kLayers; ++l) {
            mw.push_back(Eigen::MatrixXd::Zero(model.weights[l].rows(), model.weights[l].cols()));
            vw.push_back(mw.back());
            mb.push_back(Eigen::VectorXd::Zero(model.biases[l].size()));
            vb.push_back(mb.back());
        }
    }

    template <typename Param, typename Grad>
    static void update(Param& theta, const Grad& g, Param& m, Param& v, const AdamConfig& cfg,
                       double bias1, double bias2) {
        m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
        v = cfg.beta2 * v + (1.0 - cfg.beta2) * g.cwiseProduct(g);
        theta.array() -= cfg.learning_rate * (m.array() / bias1) /
                         ((v.array() / bias2).sqrt() + cfg.epsilon);
    }

    void apply(FnnModel& model, const FnnGradients& grad, const AdamConfig& cfg) {
        ++step;
        const double bias1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
        const double bias2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
        for (std::size_t l = 0; l < kLayers; ++l) {
            update(model.weights[l], grad.weights[l], mw[l], vw[l], cfg, bias1, bias2);
            update(model.biases[l], grad.biases[l], mb[l], vb[l], cfg, bias1, bias2);
        }
    }
};

Eigen::MatrixXd relu(const Eigen::MatrixXd& z) { return z.cwiseMax(0.0); }

}  // namespace

FnnModel FnnModel::initialize(std::size_t width, std::uint64_t seed) {
    if (width == 0) throw ValidationError("FNN: zero input width");
    FnnModel model;
    auto engine = make_engine(seed, "fnn/init");
    std::array<Eigen::Index, kLayers + 1> units{static_cast<Eigen::Index>(width), kHiddenWidths[0],
                                                kHiddenWidths[1], kHiddenWidths[2], 1};
    for (std::size_t l = 0; l < kLayers; ++l) {
        const double limit = std::sqrt(6.0 / static_cast<double>(units[l]));
        std::uniform_real_distribution<double> dist(-limit, limit);
        Eigen::MatrixXd w(units[l + 1], units[l]);
        for (Eigen::Index i = 0; i < w.rows(); ++i) {
            for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = dist(engine);
        }
        model.weights.push_back(std::move(w));
        model.biases.push_back(Eigen::VectorXd::Zero(units[l + 1]));
    }
    model.mean = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(width));
    model.stddev = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(width));
    return model;
}

Eigen::RowVectorXd FnnModel::normalize(std::span<const double> x) const {
    check_width(x, width());
    Eigen::RowVectorXd z(static_cast<Eigen::Index>(x.size()));
    for (Eigen::Index k = 0; k < z.size(); ++k) {
        z[k] = (x[static_cast<std::size_t>(k)] - mean[k]) / stddev[k];
    }
    return z;
}

Eigen::VectorXd FnnModel::forward(const Eigen::MatrixXd& normalized) const {
    Eigen::MatrixXd a = normalized;
    for (std::size_t l = 0; l < kLayers; ++l) {
        Eigen::MatrixXd z = (a * weights[l].transpose()).rowwise() + biases[l].transpose();
        a = (l + 1 < kLayers) ? relu(z) : z;
    }
    return a.col(0);
}

double FnnModel::predict(std::span<const double> x) const {
    return forward(normalize(x))[0];
}

double FnnModel::loss_and_gradient(const Eigen::MatrixXd& normalized, const Eigen::VectorXd& y,
                                   FnnGradients* grad) const {
    const Eigen::Index n = normalized.rows();
    std::vector<Eigen::MatrixXd> acts{normalized};  // a^0 .. a^L
    std::vector<Eigen::MatrixXd> pre;               // z^1 .. z^L
    for (std::size_t l = 0; l < kLayers; ++l) {
        pre.push_back((acts.back() * weights[l].transpose()).rowwise() + biases[l].transpose());
        acts.push_back((l + 1 < kLayers) ? relu(pre.back()) : pre.back());
    }
    const Eigen::VectorXd err = acts.back().col(0) - y;
    const double loss = err.squaredNorm() / static_cast<double>(n);
    if (grad == nullptr) return loss;

    grad->weights.assign(kLayers, {});
    grad->biases.assign(kLayers, {});
    Eigen::MatrixXd delta = (2.0 / static_cast<double>(n)) * err;  // dC/dz^L, n x 1
    for (std::size_t l = kLayers; l-- > 0;) {
        grad->weights[l] = delta.transpose() * acts[l];
        grad->biases[l] = delta.colwise().sum().transpose();
        if (l == 0) break;
        Eigen::MatrixXd upstream = delta * weights[l];
        delta = upstream.cwiseProduct((pre[l - 1].array() > 0.0).cast<double>().matrix());
    }
    return loss;
}

nlohmann::json FnnModel::to_json() const {
    nlohmann::json layers = nlohmann::json::array();
    for (std::size_t l = 0; l < kLayers; ++l) {
        nlohmann::json w = nlohmann::json::array();
        for (Eigen::Index i = 0; i < weights[l].rows(); ++i) {
            std::vector<double> row(static_cast<std::size_t>(weights[l].cols()));
            for (Eigen::Index j = 0; j < weights[l].cols(); ++j) row[static_cast<std::size_t>(j)] = weights[l](i, j);
            w.push_back(row);
        }
        layers.push_back({{"weights", w},
                          {"biases", std::vector<double>(biases[l].begin(), biases[l].end())},
                          {"activation", l + 1 < kLayers ? "relu" : "identity"}});
    }
    return {{"family", "FNN"},
            {"width", width()},
            {"layers", layers},
            {"mean", std::vector<double>(mean.begin(), mean.end())},
            {"stddev", std::vector<double>(stddev.begin(), stddev.end())},
            {"trained_epochs", trained_epochs}};
}

FnnModel fit_fnn(const data::SupervisedDataSet& data, const FitConfig& cfg) {
    cfg.validate();
    if (data.empty()) throw FitError("FNN: empty training set");
    const std::size_t width = data.width();
    const std::size_t n = data.size();

    // Chronological order by label date; stable keeps pooled ties deterministic.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return data.rows[a].label_date < data.rows[b].label_date;
    });

    const bool early_stopping = !cfg.fixed_epochs && n >= cfg.min_rows_for_validation;
    const std::size_t n_val =
        early_stopping
            ? std::max<std::size_t>(1, static_cast<std::size_t>(cfg.validation_fraction * static_cast<double>(n)))
            : 0;
    const std::size_t n_train = n - n_val;

    FnnModel model = FnnModel::initialize(width, cfg.seed);
    const auto w = static_cast<Eigen::Index>(width);
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(w);
    for (std::size_t i = 0; i < n_train; ++i) {
        sum += Eigen::Map<const Eigen::VectorXd>(data.rows[order[i]].x.data(), w);
    }
    model.mean = sum / static_cast<double>(n_train);
    Eigen::VectorXd sq = Eigen::VectorXd::Zero(w);
    for (std::size_t i = 0; i < n_train; ++i) {
        const Eigen::VectorXd d = Eigen::Map<const Eigen::VectorXd>(data.rows[order[i]].x.data(), w) - model.mean;
        sq += d.cwiseProduct(d);
    }
    model.stddev = (sq / static_cast<double>(n_train)).cwiseSqrt();
    for (Eigen::Index k = 0; k < w; ++k) {
        if (!(model.stddev[k] > 0.0) || !std::isfinite(model.stddev[k])) model.stddev[k] = 1.0;
    }

    Eigen::MatrixXd x_train(static_cast<Eigen::Index>(n_train), w);
    Eigen::VectorXd y_train(static_cast<Eigen::Index>(n_train));
    Eigen::MatrixXd x_val(static_cast<Eigen::Index>(n_val), w);
    Eigen::VectorXd y_val(static_cast<Eigen::Index>(n_val));
    for (std::size_t i = 0; i < n; ++i) {
        const auto& row = data.rows[order[i]];
        const Eigen::RowVectorXd z = model.normalize(row.x);
        if (i < n_train) {
            x_train.row(static_cast<Eigen::Index>(i)) = z;
            y_train[static_cast<Eigen::Index>(i)] = row.y;
        } else {
            x_val.row(static_cast<Eigen::Index>(i - n_train)) = z;
            y_val[static_cast<Eigen::Index>(i - n_train)] = row.y;
        }
    }

    const std::size_t epochs = cfg.fixed_epochs.value_or(cfg.max_epochs);
    const std::size_t batch = std::min(cfg.batch_size, n_train);
    auto shuffle_engine = make_engine(cfg.seed, "fnn/shuffle");
    AdamState adam(model);
    std::vector<Eigen::Index> idx(n_train);
    std::iota(idx.begin(), idx.end(), 0);

    double best_val = std::numeric_limits<double>::infinity();
    std::size_t best_epoch = 0;
    FnnModel best = model;
    FnnGradients grad;
    Eigen::MatrixXd xb;
    Eigen::VectorXd yb;
    std::size_t epoch = 0;
    while (epoch < epochs) {
        ++epoch;
        std::shuffle(idx.begin(), idx.end(), shuffle_engine);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < n_train; start += batch) {
            const std::size_t len = std::min(batch, n_train - start);
            xb.resize(static_cast<Eigen::Index>(len), w);
            yb.resize(static_cast<Eigen::Index>(len));
            for (std::size_t r = 0; r < len; ++r) {
                xb.row(static_cast<Eigen::Index>(r)) = x_train.row(idx[start + r]);
                yb[static_cast<Eigen::Index>(r)] = y_train[idx[start + r]];
            }
            epoch_loss += model.loss_and_gradient(xb, yb, &grad) * static_cast<double>(len);
            adam.apply(model, grad, cfg.adam);
        }
        if (!std::isfinite(epoch_loss)) {
            throw DivergenceError("FNN: non-finite training loss at epoch " + std::to_string(epoch) +
                                  " (seed " + std::to_string(cfg.seed) + ")");
        }
        if (!early_stopping) continue;
        const double val = model.loss_and_gradient(x_val, y_val, nullptr);
        if (!std::isfinite(val)) {
            throw DivergenceError("FNN: non-finite validation loss at epoch " + std::to_string(epoch) +
                                  " (seed " + std::to_string(cfg.seed) + ")");
        }
        if (val < best_val) {
            best_val = val;
            best_epoch = epoch;
            best.weights = model.weights;
            best.biases = model.biases;
        } else if (epoch - best_epoch >= cfg.patience) {
            break;
        }
    }

    if (early_stopping) {
        model.weights = std::move(best.weights);
        model.biases = std::move(best.biases);
        model.trained_epochs = best_epoch;
    } else {
        model.trained_epochs = epochs;
    }
    return model;
}

}  // namespace volxfer::models
