#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "symbreak/dataset.hpp"
#include "symbreak/groups.hpp"
#include "symbreak/mlp.hpp"
#include "symbreak/synthdata.hpp"

namespace symbreak {

struct MetricResult {
    double test_accuracy = 0.0;  // m(p_X)
    std::vector<EpochStats> curve;
    ConfusionCounts confusion;
    int n_train = 0;
    int n_test = 0;
};

/// Two-sample classifier test between a dataset and its group-symmetrized
/// counterpart: builds the detection dataset, trains the binary classifier,
/// and returns the held-out test accuracy.
MetricResult task_independent_metric(const LabeledDataset& raw_train,
                                     const LabeledDataset& raw_test,
                                     const GroupAction& group,
                                     const std::vector<int>& hidden,
                                     const TrainConfig& config, std::uint64_t seed);

/// Classifier distance between two samples: items of a get label 0, items
/// of b label 1; a fresh classifier is trained on a random half and scored
/// on the other half.
double classifier_distance(const LabeledDataset& a, const LabeledDataset& b,
                           const std::vector<int>& hidden, const TrainConfig& config,
                           std::uint64_t seed);

/// Best achievable accuracy distinguishing orbit weights theta from the
/// uniform orbit distribution: 1 - 1/2 sum_i min(1/r, theta_i).
double optimal_orbit_accuracy(const OrbitDistribution& dist);

}  // namespace symbreak
