#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "symbreak/groups.hpp"
#include "symbreak/synthdata.hpp"

namespace symbreak {

/// Which invariance strategy the estimator applies.
enum class EstimatorMode {
    Vanilla,            // (Sh + lambda I)^-1 Sh_yx
    TestSymmetrized,    // P0 * vanilla
    AugmentedInvariant  // (P0 Sh P0 + lambda I)^-1 P0 Sh_yx
};

/// Population covariance, invariant ground truth, noise level, sample count
/// and ridge parameter, plus the group structure (P0, d0).
struct RidgeProblem {
    Eigen::MatrixXd sigma;
    Eigen::VectorXd beta;
    double noise_std = 1.0;
    int n = 0;
    double lambda = 0.0;
    Eigen::MatrixXd p0;
    int d0 = 0;

    int d() const { return static_cast<int>(sigma.rows()); }
    Eigen::MatrixXd sigma_inv_subspace() const { return p0 * sigma * p0; }
    void validate() const;
};

RidgeProblem make_ridge_problem(const Eigen::MatrixXd& sigma, const Eigen::VectorXd& beta,
                                double noise_std, int n, double lambda,
                                const GroupAction& group);

/// Ridge / ridgeless fit. lambda = 0 means pseudoinverse semantics with
/// relative singular value cutoff 1e-10.
Eigen::VectorXd fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double lambda,
                    EstimatorMode mode, const Eigen::MatrixXd& p0);

/// Max-norm gap between the explicitly group-averaged estimator
/// (E_g[g Sh g^T] + lambda I)^-1 P0 Sh_yx and the invariant-features fit.
double augmentation_equivalence_check(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                      double lambda, const GroupAction& group);

struct BiasVariance {
    double bias = 0.0;
    double variance = 0.0;
    double risk = 0.0;
    int null_rank = 0;  // rank of Pi (or Pi_inv) in the ridgeless case
};

/// Exact conditional bias and variance of the estimator given the design X,
/// one closed form per (mode, ridge/ridgeless) combination.
BiasVariance bias_variance_conditional(const Eigen::MatrixXd& x, const RidgeProblem& problem,
                                       double lambda, EstimatorMode mode);

/// Expected ridgeless risk for d < n - 1: sigma^2 d / (n - d - 1) vanilla,
/// sigma^2 d0 / (n - d0 - 1) augmented, and
/// sigma^2 Tr(Sigma^-1 Sigma_inv) / (n - d - 1) test-symmetrized.
double expected_risk_underparam(const RidgeProblem& problem, EstimatorMode mode);

/// Tr(Sigma^-1 Sigma_inv) for the 3d permutation-correlation example, via
/// the closed form and direct numerics on the assembled matrix; the two are
/// checked against each other to 1e-10.
struct PermTrace {
    double closed_form = 0.0;
    double numeric = 0.0;
};
PermTrace perm_example_trace(double sigma_inv_sq, double rho, double tau);

/// Effective ridge kappa solving kappa (1 - T(kappa)) = lambda with
/// T(kappa) = (1/n) Tr((Sigma + kappa I)^-1 Sigma), by bisection on the
/// increasing map plus a Newton polish.
struct KappaFragment {
    double kappa = 0.0;
    double t_at_kappa = 0.0;  // T(kappa), < 1 at the fixed point
};
KappaFragment kappa_fixed_point(const Eigen::VectorXd& sigma_eigs, int n, double lambda);
KappaFragment kappa_fixed_point(const Eigen::MatrixXd& sigma, int n, double lambda);

/// Deterministic-equivalent bias/variance in the proportional regime.
struct AsymptoticSpec {
    double gamma = 0.0, gamma0 = 0.0;
    double kappa = 0.0;
    double t_at_kappa = 0.0;
    double alpha_mu_nu = 0.0;  // (1/n) Tr((Sigma_mu + kappa)^-2 Sigma_mu Sigma_nu)
    double alpha_mu_mu = 0.0;
    double bias = 0.0;
    double variance = 0.0;
    double risk = 0.0;
    bool diverged = false;  // alpha_mu_mu >= 1: at/beyond the interpolation threshold
};
AsymptoticSpec deterministic_risk(const RidgeProblem& problem, EstimatorMode mode);

/// Minimal-model closed forms: the nonnegative root of
/// kappa^2 + b kappa + c = 0 with b = (s+w) - gamma_c s + (g - gamma_c) w,
/// c = (1-g) s w, and alpha(s, w, g).
struct MinimalClosedForm {
    double kappa = 0.0;
    double alpha = 0.0;
};
MinimalClosedForm minimal_model_closed_forms(double s, double w, double g, double gamma_c);

/// Strong-correlation (sigma_w -> 0) predictions for the minimal model.
struct Theorem3Report {
    double coupling_factor = 0.0;       // C(beta)
    double shared_bias_limit = 0.0;     // gamma_c > 1: sigma_c (gamma_c-1) C ||beta||^2 / (2 gamma_c)
    bool biases_vanish = false;         // gamma_c < 1: both biases -> 0
    double alpha_vanilla_limit = 0.0;   // gamma_c < 1: gamma_c + (1-gamma_c)^2/(gamma - gamma_c)
    double alpha_augmented_limit = 0.0; // same expression at gamma0
    bool augmented_variance_larger = false;
    bool half_condition = false;        // gamma0 - gamma_c/2 < 1/2
};
Theorem3Report theorem3_limits(const MinimalModel& model, double gamma, double gamma0,
                               double gamma_c, const Eigen::VectorXd& beta);

struct MonteCarloRisk {
    double mean_risk = 0.0;
    double std_risk = 0.0;
    std::vector<double> risks;  // ordered by trial index
};

/// Per trial: draw (X, y), fit, and evaluate the exact conditional risk
/// ||beta - beta_hat||_Sigma^2. Trials run in parallel on derived seeds.
MonteCarloRisk monte_carlo_risk(const RidgeProblem& problem, EstimatorMode mode, int trials,
                                std::uint64_t seed, int workers = 1);

const char* mode_name(EstimatorMode mode);

}  // namespace symbreak
