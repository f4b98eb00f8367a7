#pragma once

#include <cstdint>
#include <vector>

#include "symbreak/classifier.hpp"
#include "symbreak/dataset.hpp"
#include "symbreak/groups.hpp"
#include "symbreak/mmd.hpp"

namespace symbreak {

enum class DistanceKind { Mmd, Classifier };

struct PValueConfig {
    int n1 = 99;          // calibration rounds
    int n2 = 10;          // actual rounds
    int subsample = 0;    // per-set subsample size; 0 = whole set
    DistanceKind distance = DistanceKind::Mmd;
    KernelSpec kernel;    // sigma <= 0 requests the median heuristic
    std::vector<int> classifier_hidden{128, 128, 128, 128};
    TrainConfig classifier_config = [] {
        TrainConfig c;
        c.epochs = 20;  // reduced budget for per-round classifiers
        return c;
    }();
    double augmented_fraction = 1.0;  // fraction of the actual data rotated; 1 = null

    void validate() const;
};

struct PValueResult {
    double p = 1.0;
    std::vector<double> calibration;  // n1 null-round distances
    std::vector<double> actual;       // n2 actual-round distances
    double mean_actual = 0.0;
};

/// Monte Carlo p-value for the invariance null. Each round subsamples both
/// sets without replacement; the test-side sample is always fully
/// transformed (the symmetrized reference), the train-side sample is fully
/// transformed in calibration rounds and transformed on an
/// augmented_fraction subset in actual rounds. p = (1 + #{calibration >
/// mean actual}) / (1 + n1), exceedance strict. Deterministic under seed
/// for any worker count.
PValueResult compute_pvalue(const LabeledDataset& train, const LabeledDataset& test,
                            const GroupAction& group, const PValueConfig& config,
                            std::uint64_t seed, int workers = 1);

struct SweepRow {
    double fraction = 0.0;
    double mean_distance = 0.0;
    double p = 1.0;
};

struct SweepResult {
    std::vector<SweepRow> rows;
    double spearman_fraction_vs_distance = 0.0;  // monotonicity diagnostic
};

/// compute_pvalue per fraction, sharing the calibration distances.
SweepResult distance_sweep(const LabeledDataset& train, const LabeledDataset& test,
                           const GroupAction& group, const PValueConfig& config,
                           const std::vector<double>& fractions, std::uint64_t seed,
                           int workers = 1);

}  // namespace symbreak
