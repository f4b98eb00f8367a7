#include "symbreak/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <json.hpp>

namespace symbreak {

void TrainConfig::validate() const {
    if (epochs < 0 || batch < 1 || lr <= 0.0 || eps <= 0.0)
        throw ConfigError("training config values must be positive");
    if (beta1 <= 0.0 || beta1 >= 1.0 || beta2 <= 0.0 || beta2 >= 1.0)
        throw ConfigError("Adam moment decays must lie in (0, 1)");
    if (val_fraction <= 0.0 || val_fraction >= 1.0)
        throw ConfigError("validation fraction must lie in (0, 1)");
    if (patience < 1) throw ConfigError("early-stopping patience must be >= 1");
}

MLPModel::MLPModel(const MLPSpec& spec, std::uint64_t seed) : spec_(spec) {
    if (spec.inputs < 1 || spec.outputs < 1)
        throw ConfigError("model needs positive input and output widths");
    Rng rng(seed);
    std::vector<int> widths;
    widths.push_back(spec.inputs);
    for (int h : spec.hidden) {
        if (h < 1) throw ConfigError("hidden widths must be positive");
        widths.push_back(h);
    }
    widths.push_back(spec.outputs);
    w_.resize(widths.size() - 1);
    b_.resize(widths.size() - 1);
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        const double std_dev = std::sqrt(2.0 / widths[l]);
        w_[l].resize(widths[l + 1], widths[l]);
        for (int i = 0; i < w_[l].rows(); ++i)
            for (int j = 0; j < w_[l].cols(); ++j) w_[l](i, j) = std_dev * rng.normal();
        b_[l] = Eigen::VectorXd::Zero(widths[l + 1]);
    }
}

int MLPModel::parameter_count() const {
    int n = 0;
    for (std::size_t l = 0; l < w_.size(); ++l)
        n += static_cast<int>(w_[l].size() + b_[l].size());
    return n;
}

Eigen::MatrixXd MLPModel::standardized(const Eigen::MatrixXd& x_cols) const {
    if (feat_mean_.size() == 0) return x_cols;
    return (x_cols.colwise() - feat_mean_).array().colwise() / feat_std_.array();
}

Eigen::MatrixXd MLPModel::forward(const Eigen::MatrixXd& x_cols) const {
    Eigen::MatrixXd a = standardized(x_cols);
    for (std::size_t l = 0; l < w_.size(); ++l) {
        a = (w_[l] * a).colwise() + b_[l];
        if (l + 1 < w_.size()) a = a.cwiseMax(0.0);
    }
    return a;
}

Eigen::VectorXd MLPModel::predict(const Eigen::VectorXd& features) const {
    return forward(features).col(0);
}

double MLPModel::predict_value(const Eigen::VectorXd& features) const {
    const Eigen::VectorXd out = predict(features);
    switch (spec_.head) {
        case Head::BinaryLogit:
            return out(0) > 0.0 ? 1.0 : 0.0;
        case Head::Softmax: {
            int arg = 0;
            out.maxCoeff(&arg);
            return arg;
        }
        case Head::Regression:
            return out(0);
    }
    return out(0);
}

namespace {

double column_loss_and_grad(Head head, const Eigen::MatrixXd& z, const Eigen::VectorXd& y,
                            Eigen::MatrixXd* dz) {
    const int b = static_cast<int>(z.cols());
    double total = 0.0;
    if (dz) dz->setZero(z.rows(), z.cols());
    switch (head) {
        case Head::BinaryLogit: {
            for (int c = 0; c < b; ++c) {
                const double zi = z(0, c), yi = y(c);
                total += std::max(zi, 0.0) - zi * yi + std::log1p(std::exp(-std::abs(zi)));
                if (dz) (*dz)(0, c) = 1.0 / (1.0 + std::exp(-zi)) - yi;
            }
            break;
        }
        case Head::Softmax: {
            for (int c = 0; c < b; ++c) {
                const int cls = static_cast<int>(y(c));
                const double zmax = z.col(c).maxCoeff();
                double lse = 0.0;
                for (int k = 0; k < z.rows(); ++k) lse += std::exp(z(k, c) - zmax);
                lse = zmax + std::log(lse);
                total += lse - z(cls, c);
                if (dz) {
                    for (int k = 0; k < z.rows(); ++k)
                        (*dz)(k, c) = std::exp(z(k, c) - lse);
                    (*dz)(cls, c) -= 1.0;
                }
            }
            break;
        }
        case Head::Regression: {
            for (int c = 0; c < b; ++c) {
                const double diff = z(0, c) - y(c);
                total += 0.5 * diff * diff;
                if (dz) (*dz)(0, c) = diff;
            }
            break;
        }
    }
    if (dz) *dz /= static_cast<double>(b);
    return total / static_cast<double>(b);
}

}  // namespace

double MLPModel::loss(const Eigen::MatrixXd& x_cols, const Eigen::VectorXd& y) const {
    return column_loss_and_grad(spec_.head, forward(x_cols), y, nullptr);
}

double MLPModel::accuracy(const Eigen::MatrixXd& x_cols, const Eigen::VectorXd& y) const {
    const Eigen::MatrixXd z = forward(x_cols);
    const int b = static_cast<int>(z.cols());
    switch (spec_.head) {
        case Head::BinaryLogit: {
            int ok = 0;
            for (int c = 0; c < b; ++c)
                if ((z(0, c) > 0.0) == (y(c) > 0.5)) ++ok;
            return static_cast<double>(ok) / b;
        }
        case Head::Softmax: {
            int ok = 0;
            for (int c = 0; c < b; ++c) {
                int arg = 0;
                z.col(c).maxCoeff(&arg);
                if (arg == static_cast<int>(y(c))) ++ok;
            }
            return static_cast<double>(ok) / b;
        }
        case Head::Regression: {
            // score for model selection: negative mean squared error
            double mse = 0.0;
            for (int c = 0; c < b; ++c) mse += (z(0, c) - y(c)) * (z(0, c) - y(c));
            return -mse / b;
        }
    }
    return 0.0;
}

Eigen::VectorXd MLPModel::parameters() const {
    Eigen::VectorXd theta(parameter_count());
    int at = 0;
    for (std::size_t l = 0; l < w_.size(); ++l) {
        for (int i = 0; i < w_[l].rows(); ++i)
            for (int j = 0; j < w_[l].cols(); ++j) theta(at++) = w_[l](i, j);
        for (int i = 0; i < b_[l].size(); ++i) theta(at++) = b_[l](i);
    }
    return theta;
}

void MLPModel::set_parameters(const Eigen::VectorXd& theta) {
    if (theta.size() != parameter_count())
        throw DimensionError("parameter vector length mismatch");
    int at = 0;
    for (std::size_t l = 0; l < w_.size(); ++l) {
        for (int i = 0; i < w_[l].rows(); ++i)
            for (int j = 0; j < w_[l].cols(); ++j) w_[l](i, j) = theta(at++);
        for (int i = 0; i < b_[l].size(); ++i) b_[l](i) = theta(at++);
    }
}

void MLPModel::set_input_stats(const Eigen::VectorXd& mean, const Eigen::VectorXd& std) {
    feat_mean_ = mean;
    feat_std_ = std;
}

namespace {

/// Backprop through the net; returns per-layer gradients of the mean loss.
double backward(const std::vector<Eigen::MatrixXd>& w,
                const std::vector<Eigen::VectorXd>& b, Head head,
                const Eigen::MatrixXd& x_std, const Eigen::VectorXd& y,
                std::vector<Eigen::MatrixXd>& gw, std::vector<Eigen::VectorXd>& gb) {
    const std::size_t layers = w.size();
    std::vector<Eigen::MatrixXd> acts(layers + 1);
    acts[0] = x_std;
    for (std::size_t l = 0; l < layers; ++l) {
        acts[l + 1] = (w[l] * acts[l]).colwise() + b[l];
        if (l + 1 < layers) acts[l + 1] = acts[l + 1].cwiseMax(0.0);
    }
    Eigen::MatrixXd delta;
    const double loss = column_loss_and_grad(head, acts[layers], y, &delta);
    for (std::size_t li = layers; li-- > 0;) {
        gw[li] = delta * acts[li].transpose();
        gb[li] = delta.rowwise().sum();
        if (li > 0) {
            delta = w[li].transpose() * delta;
            // rectifier mask of the preceding hidden activation
            delta = delta.array() * (acts[li].array() > 0.0).cast<double>();
        }
    }
    return loss;
}

}  // namespace

Eigen::VectorXd MLPModel::loss_gradient(const Eigen::MatrixXd& x_cols,
                                        const Eigen::VectorXd& y) const {
    std::vector<Eigen::MatrixXd> gw(w_.size());
    std::vector<Eigen::VectorXd> gb(b_.size());
    backward(w_, b_, spec_.head, standardized(x_cols), y, gw, gb);
    Eigen::VectorXd grad(parameter_count());
    int at = 0;
    for (std::size_t l = 0; l < w_.size(); ++l) {
        for (int i = 0; i < gw[l].rows(); ++i)
            for (int j = 0; j < gw[l].cols(); ++j) grad(at++) = gw[l](i, j);
        for (int i = 0; i < gb[l].size(); ++i) grad(at++) = gb[l](i);
    }
    return grad;
}

namespace {

void check_labels(Head head, const Eigen::VectorXd& y) {
    if (head == Head::Regression) return;
    long c0 = 0, c1 = 0;
    double lo = y.size() ? y.minCoeff() : 0.0;
    double hi = y.size() ? y.maxCoeff() : 0.0;
    for (int i = 0; i < y.size(); ++i) (y(i) > 0.5 ? c1 : c0)++;
    if (head == Head::BinaryLogit && (c0 < 2 || c1 < 2))
        throw DatasetError("binary training needs at least 2 items per class");
    if (head == Head::Softmax && lo == hi)
        throw DatasetError("classification training data has a single class");
}

struct AdamState {
    std::vector<Eigen::MatrixXd> mw, vw;
    std::vector<Eigen::VectorXd> mb, vb;
    long t = 0;
};

}  // namespace

class Trainer {
public:
    static TrainResult run(const MLPSpec& spec, const EpochDataProvider& provider,
                           const Eigen::MatrixXd& x_val, const Eigen::VectorXd& y_val,
                           const TrainConfig& config) {
        config.validate();
        TrainResult result;
        result.model = MLPModel(spec, derive_seed(config.seed, 11));

        Rng data_rng(derive_seed(config.seed, 12));
        Rng shuffle_rng(derive_seed(config.seed, 13));

        Eigen::MatrixXd x;
        Eigen::VectorXd y;
        provider(0, data_rng, x, y);
        if (x.rows() == 0) throw DatasetError("empty training data");
        if (x.cols() != spec.inputs) throw DimensionError("feature width does not match model");
        check_labels(spec.head, y);

        MLPModel& model = result.model;
        if (config.standardize) {
            Eigen::VectorXd mean = x.colwise().mean();
            Eigen::VectorXd sd(x.cols());
            for (int j = 0; j < x.cols(); ++j) {
                const double var =
                    (x.col(j).array() - mean(j)).square().sum() / std::max<int>(1, x.rows() - 1);
                sd(j) = var > 1e-24 ? std::sqrt(var) : 1.0;
            }
            model.set_input_stats(mean, sd);
        }

        const bool has_val = x_val.rows() > 0;
        AdamState adam;
        adam.mw.resize(model.w_.size());
        adam.vw.resize(model.w_.size());
        adam.mb.resize(model.b_.size());
        adam.vb.resize(model.b_.size());
        for (std::size_t l = 0; l < model.w_.size(); ++l) {
            adam.mw[l] = Eigen::MatrixXd::Zero(model.w_[l].rows(), model.w_[l].cols());
            adam.vw[l] = adam.mw[l];
            adam.mb[l] = Eigen::VectorXd::Zero(model.b_[l].size());
            adam.vb[l] = adam.mb[l];
        }

        std::vector<Eigen::MatrixXd> gw(model.w_.size());
        std::vector<Eigen::VectorXd> gb(model.b_.size());
        std::vector<Eigen::MatrixXd> best_w = model.w_;
        std::vector<Eigen::VectorXd> best_b = model.b_;
        double best_val = -std::numeric_limits<double>::infinity();
        int best_epoch = -1;
        int since_best = 0;

        const Eigen::MatrixXd x_val_t = x_val.transpose();

        for (int epoch = 0; epoch < config.epochs; ++epoch) {
            if (epoch > 0) {
                provider(epoch, data_rng, x, y);
                check_labels(spec.head, y);
            }
            const int n = static_cast<int>(x.rows());
            auto order = shuffle_rng.permutation(n);
            double epoch_loss = 0.0;
            long correct_proxy = 0;
            int batches = 0;
            for (int start = 0; start < n; start += config.batch) {
                const int bsz = std::min(config.batch, n - start);
                Eigen::MatrixXd xb(spec.inputs, bsz);
                Eigen::VectorXd yb(bsz);
                for (int i = 0; i < bsz; ++i) {
                    xb.col(i) = x.row(order[start + i]).transpose();
                    yb(i) = y(order[start + i]);
                }
                const double batch_loss =
                    backward(model.w_, model.b_, spec.head,
                             model.standardized(xb), yb, gw, gb);
                if (!std::isfinite(batch_loss))
                    throw DivergenceError("training loss is not finite", epoch);
                epoch_loss += batch_loss * bsz;
                correct_proxy += static_cast<long>(
                    std::lround(model.accuracy(xb, yb) * bsz));
                ++batches;

                adam.t += 1;
                const double bc1 = 1.0 - std::pow(config.beta1, adam.t);
                const double bc2 = 1.0 - std::pow(config.beta2, adam.t);
                for (std::size_t l = 0; l < model.w_.size(); ++l) {
                    adam.mw[l] = config.beta1 * adam.mw[l] + (1 - config.beta1) * gw[l];
                    adam.vw[l] = config.beta2 * adam.vw[l] +
                                 (1 - config.beta2) * gw[l].array().square().matrix();
                    adam.mb[l] = config.beta1 * adam.mb[l] + (1 - config.beta1) * gb[l];
                    adam.vb[l] = config.beta2 * adam.vb[l] +
                                 (1 - config.beta2) * gb[l].array().square().matrix();
                    model.w_[l] -=
                        (config.lr * (adam.mw[l] / bc1).array() /
                         ((adam.vw[l] / bc2).array().sqrt() + config.eps))
                            .matrix();
                    model.b_[l] -=
                        (config.lr * (adam.mb[l] / bc1).array() /
                         ((adam.vb[l] / bc2).array().sqrt() + config.eps))
                            .matrix();
                }
            }
            EpochStats stats;
            stats.epoch = epoch;
            stats.train_loss = epoch_loss / n;
            stats.train_acc = static_cast<double>(correct_proxy) / n;
            stats.val_acc = has_val ? model.accuracy(x_val_t, y_val) : 0.0;
            result.curve.push_back(stats);

            if (has_val) {
                if (stats.val_acc > best_val) {
                    best_val = stats.val_acc;
                    best_w = model.w_;
                    best_b = model.b_;
                    best_epoch = epoch;
                    since_best = 0;
                } else if (++since_best >= config.patience) {
                    break;
                }
            } else {
                best_w = model.w_;
                best_b = model.b_;
                best_epoch = epoch;
            }
        }
        model.w_ = std::move(best_w);
        model.b_ = std::move(best_b);
        result.best_epoch = best_epoch;
        return result;
    }
};

TrainResult train_with_provider(const MLPSpec& spec, const EpochDataProvider& provider,
                                const Eigen::MatrixXd& x_val, const Eigen::VectorXd& y_val,
                                const TrainConfig& config) {
    return Trainer::run(spec, provider, x_val, y_val, config);
}

TrainResult train(const MLPSpec& spec, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                  const TrainConfig& config) {
    config.validate();
    if (x.rows() == 0) throw DatasetError("empty training data");
    check_labels(spec.head, y);
    // deterministic validation split
    Rng split_rng(derive_seed(config.seed, 10));
    const int n = static_cast<int>(x.rows());
    auto order = split_rng.permutation(n);
    int n_val = static_cast<int>(std::lround(config.val_fraction * n));
    n_val = std::max(1, std::min(n - 1, n_val));
    Eigen::MatrixXd x_train(n - n_val, x.cols()), x_val(n_val, x.cols());
    Eigen::VectorXd y_train(n - n_val), y_val(n_val);
    for (int i = 0; i < n_val; ++i) {
        x_val.row(i) = x.row(order[i]);
        y_val(i) = y(order[i]);
    }
    for (int i = n_val; i < n; ++i) {
        x_train.row(i - n_val) = x.row(order[i]);
        y_train(i - n_val) = y(order[i]);
    }
    auto provider = [&](int, Rng&, Eigen::MatrixXd& xe, Eigen::VectorXd& ye) {
        xe = x_train;
        ye = y_train;
    };
    return Trainer::run(spec, provider, x_val, y_val, config);
}

void MLPModel::save(const std::string& path) const {
    nlohmann::json j;
    j["format_version"] = 1;
    j["inputs"] = spec_.inputs;
    j["outputs"] = spec_.outputs;
    j["hidden"] = spec_.hidden;
    j["head"] = spec_.head == Head::BinaryLogit ? "binary"
                : spec_.head == Head::Softmax   ? "softmax"
                                                : "regression";
    auto dump_vec = [](const Eigen::VectorXd& v) {
        return std::vector<double>(v.data(), v.data() + v.size());
    };
    for (std::size_t l = 0; l < w_.size(); ++l) {
        nlohmann::json layer;
        layer["rows"] = w_[l].rows();
        layer["cols"] = w_[l].cols();
        std::vector<double> weights;
        weights.reserve(w_[l].size());
        for (int i = 0; i < w_[l].rows(); ++i)
            for (int j2 = 0; j2 < w_[l].cols(); ++j2) weights.push_back(w_[l](i, j2));
        layer["weights_row_major"] = weights;
        layer["bias"] = dump_vec(b_[l]);
        j["layers"].push_back(layer);
    }
    j["input_mean"] = dump_vec(feat_mean_);
    j["input_std"] = dump_vec(feat_std_);
    std::ofstream f(path);
    if (!f) throw ConfigError("cannot open " + path + " for writing");
    f << j.dump(2) << "\n";
}

MLPModel MLPModel::load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open " + path);
    nlohmann::json j = nlohmann::json::parse(f);
    if (j.value("format_version", -1) != 1)
        throw ConfigError("unsupported model format_version in " + path);
    MLPModel m;
    m.spec_.inputs = j.at("inputs").get<int>();
    m.spec_.outputs = j.at("outputs").get<int>();
    m.spec_.hidden = j.at("hidden").get<std::vector<int>>();
    const std::string head = j.at("head").get<std::string>();
    m.spec_.head = head == "binary"    ? Head::BinaryLogit
                   : head == "softmax" ? Head::Softmax
                                       : Head::Regression;
    for (const auto& layer : j.at("layers")) {
        const int rows = layer.at("rows").get<int>();
        const int cols = layer.at("cols").get<int>();
        const auto weights = layer.at("weights_row_major").get<std::vector<double>>();
        Eigen::MatrixXd w(rows, cols);
        for (int i = 0; i < rows; ++i)
            for (int c = 0; c < cols; ++c) w(i, c) = weights[i * cols + c];
        m.w_.push_back(std::move(w));
        const auto bias = layer.at("bias").get<std::vector<double>>();
        m.b_.push_back(Eigen::Map<const Eigen::VectorXd>(bias.data(), bias.size()));
    }
    const auto mean = j.at("input_mean").get<std::vector<double>>();
    const auto sd = j.at("input_std").get<std::vector<double>>();
    m.feat_mean_ = Eigen::Map<const Eigen::VectorXd>(mean.data(), mean.size());
    m.feat_std_ = Eigen::Map<const Eigen::VectorXd>(sd.data(), sd.size());
    return m;
}

void save_curve_csv(const std::vector<EpochStats>& curve, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw ConfigError("cannot open " + path + " for writing");
    f << "epoch,train_loss,train_acc,val_acc\n";
    char buf[256];
    for (const auto& e : curve) {
        std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g\n", e.epoch, e.train_loss,
                      e.train_acc, e.val_acc);
        f << buf;
    }
}

}  // namespace symbreak
