#pragma once

#include <Eigen/Dense>
#include <vector>

#include "symbreak/dataset.hpp"
#include "symbreak/rng.hpp"

namespace symbreak {

enum class KernelKind { NaiveMeanCov, Chamfer, Hausdorff };

struct KernelSpec {
    KernelKind kind = KernelKind::Chamfer;
    double sigma = 1.0;

    void validate() const {
        if (sigma <= 0.0) throw ConfigError("kernel bandwidth sigma must be positive");
    }
};

struct MMDResult {
    double value = 0.0;
    double xx_mean = 0.0, yy_mean = 0.0, xy_mean = 0.0;
};

/// Kernel between two clouds. Masked rows are dropped before any distance
/// is computed, so a padded cloud with its padding masked out is
/// bit-identical to the compact unmasked cloud.
///
/// naive: Gaussian kernel exp(-||e_x - e_y||^2 / sigma) on embeddings
///   [mean; flattened uncentered second moment]. The "covariance" block is
///   the raw sum x x^T / count, not the centered covariance.
/// chamfer: exp(-CD / (2 sigma^2)) with CD the symmetric mean of unsquared
///   nearest-neighbor distances.
/// hausdorff: exp(-HD / (2 sigma^2)) with HD the max of directed maxima.
double kernel_value(const KernelSpec& spec, const DataItem& x, const DataItem& y);

/// Biased V-statistic: within-set means keep the diagonal terms and are
/// normalized by n^2; the cross term is the full mean. Identical inputs
/// give exactly zero. The pair matrix may be filled by several workers;
/// sums are reduced in a fixed order so results do not depend on the
/// worker count.
MMDResult mmd(const std::vector<DataItem>& x, const std::vector<DataItem>& y,
              const KernelSpec& spec, int workers = 1);

/// Median of the kernel's base distance over up to `pairs` random pairs,
/// the default bandwidth when none is configured.
double median_heuristic_sigma(const std::vector<DataItem>& clouds, KernelKind kind,
                              Rng& rng, int pairs = 100);

}  // namespace symbreak
