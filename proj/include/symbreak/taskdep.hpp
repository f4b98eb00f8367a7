#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "symbreak/classifier.hpp"
#include "symbreak/dataset.hpp"
#include "symbreak/groups.hpp"
#include "symbreak/mlp.hpp"

namespace symbreak {

/// Equivariant canonicalization map c(x) built from a scalar scorer applied
/// to every transformed copy of the input: c(x) = argmin_g scorer(g^-1 x),
/// ties broken by element order. The default scorer is frozen at random
/// initialization.
struct Canonicalizer {
    explicit Canonicalizer(GroupAction g) : group(std::move(g)) {}

    GroupAction group;
    MLPModel scorer;
    bool is_cloud = false;
    int point_dim = 0;
    int max_points = 1;
};

/// Random frozen scorer whose input statistics come from a reference
/// dataset (so scores are computed on standardized features).
Canonicalizer make_random_canonicalizer(const GroupAction& group,
                                        const LabeledDataset& reference,
                                        const std::vector<int>& hidden, std::uint64_t seed);

/// Element index of c(x).
int canonicalize(const Canonicalizer& canon, const DataItem& item);

struct TaskDepResult {
    double m1 = 0.0;        // detection accuracy on matched vs mismatched pairs
    double m2 = 0.0;        // mismatched minus matched 0/1 loss of the direct predictor
    double m2_xent = 0.0;   // auxiliary cross-entropy variant of m2
    std::vector<EpochStats> curve;
};

/// Train a binary classifier to spot mismatched (orientation, label) pairs;
/// mismatched training pairs are re-drawn without replacement each epoch.
TaskDepResult detection_metric_m1(const LabeledDataset& data, const Canonicalizer& canon,
                                  const std::vector<int>& hidden, const TrainConfig& config,
                                  std::uint64_t seed);

/// Train a predictor from one-hot c(x) to the label and report the
/// calibrated 0/1-loss gap (mismatched minus matched) on held-out data.
TaskDepResult direct_metric_m2(const LabeledDataset& data, const Canonicalizer& canon,
                               const std::vector<int>& hidden, const TrainConfig& config,
                               std::uint64_t seed);

/// Exact optima over the classifier constructions that link the two
/// metrics, evaluated on a finite joint distribution over (group element,
/// label) cells. Verifies m2* = 2 m1* - 1 to 1e-12.
struct AffineRelation {
    double m1_star = 0.0;       // optimum over prediction-induced pair classifiers
    double m2_star = 0.0;       // optimum over direct prediction maps
    double m1_two_sample = 0.0; // unrestricted Bayes accuracy (1 + TV)/2, an upper bound
};
AffineRelation affine_relation_check(const Eigen::MatrixXd& joint);

}  // namespace symbreak
