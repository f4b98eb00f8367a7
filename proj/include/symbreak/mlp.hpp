#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "symbreak/errors.hpp"
#include "symbreak/rng.hpp"

namespace symbreak {

enum class Head { BinaryLogit, Softmax, Regression };

struct MLPSpec {
    int inputs = 0;
    std::vector<int> hidden{128, 128, 128, 128};
    int outputs = 1;
    Head head = Head::BinaryLogit;
};

struct TrainConfig {
    int epochs = 60;
    int batch = 100;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::uint64_t seed = 0;
    double val_fraction = 0.2;
    int patience = 10;
    bool standardize = true;  // z-score inputs using training-split statistics

    void validate() const;
};

/// Feed-forward net with rectifier hidden layers and identity output.
/// Weights are dense row-major matrices; forward passes are deterministic
/// and a trained model is immutable for inference.
class MLPModel {
public:
    MLPModel() = default;
    MLPModel(const MLPSpec& spec, std::uint64_t seed);

    const MLPSpec& spec() const { return spec_; }
    int parameter_count() const;

    /// Raw outputs (logits or regression values), one column per sample.
    Eigen::MatrixXd forward(const Eigen::MatrixXd& x_cols) const;
    /// Single-sample convenience taking a feature row vector.
    Eigen::VectorXd predict(const Eigen::VectorXd& features) const;
    /// Hard prediction: binary 0/1, class index, or first output.
    double predict_value(const Eigen::VectorXd& features) const;

    double loss(const Eigen::MatrixXd& x_cols, const Eigen::VectorXd& y) const;
    double accuracy(const Eigen::MatrixXd& x_cols, const Eigen::VectorXd& y) const;

    /// Flat parameter access, for gradient checks and serialization.
    Eigen::VectorXd parameters() const;
    void set_parameters(const Eigen::VectorXd& theta);
    /// Loss gradient w.r.t. the flat parameter vector (mean over columns).
    Eigen::VectorXd loss_gradient(const Eigen::MatrixXd& x_cols, const Eigen::VectorXd& y) const;

    void set_input_stats(const Eigen::VectorXd& mean, const Eigen::VectorXd& std);
    const Eigen::VectorXd& input_mean() const { return feat_mean_; }
    const Eigen::VectorXd& input_std() const { return feat_std_; }

    void save(const std::string& path) const;
    static MLPModel load(const std::string& path);

private:
    friend class Trainer;
    Eigen::MatrixXd standardized(const Eigen::MatrixXd& x_cols) const;

    MLPSpec spec_;
    std::vector<Eigen::MatrixXd> w_;
    std::vector<Eigen::VectorXd> b_;
    Eigen::VectorXd feat_mean_, feat_std_;
};

struct EpochStats {
    int epoch = 0;
    double train_loss = 0.0;
    double train_acc = 0.0;
    double val_acc = 0.0;
};

struct ConfusionCounts {
    long tp = 0, tn = 0, fp = 0, fn = 0;
};

struct TrainResult {
    MLPModel model;
    std::vector<EpochStats> curve;
    int best_epoch = -1;  // -1 when validation never ran (epochs == 0)
};

/// Fresh training batches per epoch; rows are samples. Lets callers
/// re-pair or re-augment data between epochs.
using EpochDataProvider =
    std::function<void(int epoch, Rng& rng, Eigen::MatrixXd& x, Eigen::VectorXd& y)>;

/// Minimize BCE / cross-entropy / squared error with mini-batch Adam,
/// scaled-Gaussian init (std sqrt(2/fan_in)), early stopping on validation
/// accuracy, returning the model at the best validation epoch. x rows are
/// samples. Deterministic under config.seed.
TrainResult train(const MLPSpec& spec, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                  const TrainConfig& config);

/// Variant with an explicit validation set and a per-epoch data provider.
TrainResult train_with_provider(const MLPSpec& spec, const EpochDataProvider& provider,
                                const Eigen::MatrixXd& x_val, const Eigen::VectorXd& y_val,
                                const TrainConfig& config);

/// Append the per-epoch curve as CSV (epoch, train_loss, train_acc, val_acc).
void save_curve_csv(const std::vector<EpochStats>& curve, const std::string& path);

}  // namespace symbreak
