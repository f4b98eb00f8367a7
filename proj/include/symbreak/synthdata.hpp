#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "symbreak/dataset.hpp"
#include "symbreak/groups.hpp"

namespace symbreak {

/// Probability weights over the points of a single finite-group orbit.
struct OrbitDistribution {
    int orbit_size = 0;
    Eigen::VectorXd weights;

    void validate() const;
    static OrbitDistribution uniform(int r);
    static OrbitDistribution one_hot(int r, int index = 0);
};

/// Labeled original-vs-transformed samples: within each split, the items of
/// a random half were transformed by independent Haar draws (label 1) and
/// the rest left untouched (label 0).
struct DetectionDataset {
    LabeledDataset train;
    LabeledDataset test;
    GroupAction group;
    std::uint64_t seed = 0;
};

/// Random halving, Haar transform of one half, binary labels; label-0 items
/// are bit-identical to their inputs. Deterministic under seed.
DetectionDataset build_detection_dataset(const LabeledDataset& raw_train,
                                         const LabeledDataset& raw_test,
                                         const GroupAction& group, std::uint64_t seed);

/// Two interleaved 3d spirals with binary class labels; a Bernoulli(p)
/// subset of class 1 sits at the separated z level, the rest share class
/// 0's base level. Class sizes are exactly n/2.
LabeledDataset swiss_roll(int n, double p, std::uint64_t seed);

/// n i.i.d. draws g_i x0 with orbit index i ~ weights; labels record i.
LabeledDataset orbit_dataset(const GroupAction& group, const Eigen::VectorXd& x0,
                             const OrbitDistribution& dist, int n, std::uint64_t seed);

/// Clouds of m i.i.d. points from the axis-aligned Gaussian with principal
/// variance `anisotropy` and unit minor variances; anisotropy 1 gives
/// rotation-invariant clouds, larger values a canonicalized dataset.
LabeledDataset canonicalized_clouds(int n_clouds, int m_points, double anisotropy,
                                    std::uint64_t seed);

/// Minimal covariance model: d_c coupling eigenvectors u_k that are equal
/// superpositions of V0 and Vperp basis vectors.
struct MinimalModel {
    Eigen::MatrixXd sigma;           // d x d covariance
    Eigen::MatrixXd coupling_modes;  // d x d_c, the u_k
    Eigen::MatrixXd v0_partners;     // d x d_c, the v_{0,k}
    double sigma_c = 0.0, sigma_w = 0.0;
    int d_c = 0;
};

/// Sigma = (sigma_c - sigma_w) sum u_k u_k^T + sigma_w I with eigenvalues
/// {sigma_c x d_c, sigma_w x (d - d_c)}.
MinimalModel minimal_model_covariance(int d, int d0, int d_c, double sigma_c,
                                      double sigma_w, const GroupAction& group);

/// Rows of X i.i.d. N(0, Sigma) via Cholesky (with 1e-12 diagonal jitter if
/// semi-definite); y = X beta + noise.
struct RegressionSample {
    Eigen::MatrixXd x;
    Eigen::VectorXd y;
};
RegressionSample gaussian_regression_sample(const Eigen::MatrixXd& sigma,
                                            const Eigen::VectorXd& beta, double noise_std,
                                            int n, std::uint64_t seed);

/// Random invariant direction: P0 z / ||P0 z|| * norm for Gaussian z.
Eigen::VectorXd invariant_beta(const GroupAction& group, int d, double norm,
                               std::uint64_t seed);

/// Cholesky factor of a PSD matrix, jittered when semi-definite. Shared by
/// the samplers and the ridge Monte Carlo driver.
Eigen::MatrixXd psd_cholesky(const Eigen::MatrixXd& sigma);

}  // namespace symbreak
