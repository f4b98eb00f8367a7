#include "symbreak/ridge.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "symbreak/parallel.hpp"
#include "symbreak/stats.hpp"

namespace symbreak {

namespace {
constexpr double kRidgelessCutoff = 1e-10;  // relative singular value cutoff

Eigen::MatrixXd symmetric_pinv(const Eigen::MatrixXd& m, int* rank_out = nullptr) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
    const Eigen::VectorXd vals = eig.eigenvalues();
    const double cutoff = kRidgelessCutoff * std::max(vals.cwiseAbs().maxCoeff(), 1e-300);
    Eigen::VectorXd inv = Eigen::VectorXd::Zero(vals.size());
    int rank = 0;
    for (int i = 0; i < vals.size(); ++i) {
        if (vals(i) > cutoff) {
            inv(i) = 1.0 / vals(i);
            ++rank;
        }
    }
    if (rank_out) *rank_out = rank;
    return eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose();
}

}  // namespace

void RidgeProblem::validate() const {
    if (sigma.rows() != sigma.cols()) throw DimensionError("covariance must be square");
    if (beta.size() != sigma.rows()) throw DimensionError("ground truth length mismatch");
    if (p0.rows() != sigma.rows() || p0.cols() != sigma.rows())
        throw DimensionError("projection shape mismatch");
    if (n < 1) throw ConfigError("sample count must be positive");
    if (lambda < 0.0) throw ConfigError("ridge parameter must be >= 0");
    if (noise_std < 0.0) throw ConfigError("noise level must be >= 0");
    if ((p0 * beta - beta).cwiseAbs().maxCoeff() > 1e-10)
        throw ConfigError("ground truth is not invariant (P0 beta != beta)");
}

RidgeProblem make_ridge_problem(const Eigen::MatrixXd& sigma, const Eigen::VectorXd& beta,
                                double noise_std, int n, double lambda,
                                const GroupAction& group) {
    RidgeProblem p;
    p.sigma = sigma;
    p.beta = beta;
    p.noise_std = noise_std;
    p.n = n;
    p.lambda = lambda;
    p.p0 = group.invariant_projection();
    p.d0 = group.invariant_dim();
    p.validate();
    return p;
}

Eigen::VectorXd fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double lambda,
                    EstimatorMode mode, const Eigen::MatrixXd& p0) {
    if (x.rows() != y.size()) throw DimensionError("design and labels disagree on n");
    if (mode != EstimatorMode::Vanilla && (p0.rows() != x.cols() || p0.cols() != x.cols()))
        throw DimensionError("projection shape does not match the design");
    if (lambda < 0.0) throw ConfigError("ridge parameter must be >= 0");

    const Eigen::MatrixXd design = mode == EstimatorMode::AugmentedInvariant ? x * p0 : x;
    const double n = static_cast<double>(x.rows());
    Eigen::BDCSVD<Eigen::MatrixXd> svd(design, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& s = svd.singularValues();
    Eigen::VectorXd coef = svd.matrixU().transpose() * y;
    if (lambda > 0.0) {
        for (int i = 0; i < s.size(); ++i)
            coef(i) *= s(i) / (s(i) * s(i) + n * lambda);
    } else {
        const double cutoff = kRidgelessCutoff * std::max(s.size() ? s(0) : 0.0, 1e-300);
        for (int i = 0; i < s.size(); ++i)
            coef(i) = s(i) > cutoff ? coef(i) / s(i) : 0.0;
    }
    Eigen::VectorXd beta_hat = svd.matrixV() * coef;
    if (mode == EstimatorMode::TestSymmetrized) beta_hat = p0 * beta_hat;
    return beta_hat;
}

double augmentation_equivalence_check(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                      double lambda, const GroupAction& group) {
    const int d = static_cast<int>(x.cols());
    if (group.dim() != d) throw DimensionError("group dimension does not match the design");
    const Eigen::MatrixXd& p0 = group.invariant_projection();
    const double n = static_cast<double>(x.rows());
    const Eigen::MatrixXd emp_cov = x.transpose() * x / n;
    const Eigen::MatrixXd cov_aug = group.symmetrize_covariance(emp_cov);
    const Eigen::VectorXd rhs = p0 * (x.transpose() * y / n);

    Eigen::VectorXd beta_aug;
    if (lambda > 0.0) {
        beta_aug = (cov_aug + lambda * Eigen::MatrixXd::Identity(d, d)).ldlt().solve(rhs);
    } else {
        beta_aug = symmetric_pinv(cov_aug) * rhs;
    }
    const Eigen::VectorXd beta_inv = fit(x, y, lambda, EstimatorMode::AugmentedInvariant, p0);
    return (beta_aug - beta_inv).cwiseAbs().maxCoeff();
}

BiasVariance bias_variance_conditional(const Eigen::MatrixXd& x, const RidgeProblem& problem,
                                       double lambda, EstimatorMode mode) {
    problem.validate();
    const int d = problem.d();
    if (x.cols() != d) throw DimensionError("design does not match the problem dimension");
    const double n = static_cast<double>(x.rows());
    const double noise_var = problem.noise_std * problem.noise_std;
    const Eigen::MatrixXd emp_cov = x.transpose() * x / n;
    const Eigen::MatrixXd sigma_inv_sub = problem.sigma_inv_subspace();
    const Eigen::VectorXd& beta = problem.beta;

    BiasVariance out;
    if (lambda > 0.0) {
        const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(d, d);
        switch (mode) {
            case EstimatorMode::Vanilla: {
                const Eigen::MatrixXd res = (emp_cov + lambda * eye).ldlt().solve(eye);
                const Eigen::VectorXd rb = res * beta;
                out.bias = lambda * lambda * rb.dot(problem.sigma * rb);
                out.variance = noise_var / n * (res * emp_cov * res * problem.sigma).trace();
                break;
            }
            case EstimatorMode::TestSymmetrized: {
                const Eigen::MatrixXd res = (emp_cov + lambda * eye).ldlt().solve(eye);
                const Eigen::VectorXd rb = res * beta;
                out.bias = lambda * lambda * rb.dot(sigma_inv_sub * rb);
                out.variance = noise_var / n * (res * emp_cov * res * sigma_inv_sub).trace();
                break;
            }
            case EstimatorMode::AugmentedInvariant: {
                const Eigen::MatrixXd emp_inv = problem.p0 * emp_cov * problem.p0;
                const Eigen::MatrixXd res = (emp_inv + lambda * eye).ldlt().solve(eye);
                const Eigen::VectorXd rb = res * beta;
                out.bias = lambda * lambda * rb.dot(problem.sigma * rb);
                out.variance = noise_var / n * (res * emp_inv * res * problem.sigma).trace();
                break;
            }
        }
    } else {
        switch (mode) {
            case EstimatorMode::Vanilla:
            case EstimatorMode::TestSymmetrized: {
                int rank = 0;
                const Eigen::MatrixXd pinv = symmetric_pinv(emp_cov, &rank);
                const Eigen::MatrixXd null_proj =
                    Eigen::MatrixXd::Identity(d, d) - pinv * emp_cov;
                out.null_rank = d - rank;
                const Eigen::VectorXd pb = null_proj * beta;
                const Eigen::MatrixXd& target =
                    mode == EstimatorMode::Vanilla ? problem.sigma : sigma_inv_sub;
                out.bias = pb.dot(target * pb);
                out.variance = noise_var / n * (pinv * target).trace();
                break;
            }
            case EstimatorMode::AugmentedInvariant: {
                const Eigen::MatrixXd emp_inv = problem.p0 * emp_cov * problem.p0;
                int rank = 0;
                const Eigen::MatrixXd pinv = symmetric_pinv(emp_inv, &rank);
                const Eigen::MatrixXd null_proj = problem.p0 - pinv * emp_inv;
                out.null_rank = problem.d0 - rank;
                const Eigen::VectorXd pb = null_proj * beta;
                out.bias = pb.dot(problem.sigma * pb);
                out.variance = noise_var / n * (pinv * problem.sigma).trace();
                break;
            }
        }
    }
    out.risk = out.bias + out.variance;
    return out;
}

double expected_risk_underparam(const RidgeProblem& problem, EstimatorMode mode) {
    problem.validate();
    const int d = problem.d();
    const int n = problem.n;
    if (d >= n - 1) throw RegimeError("under-parameterized formulas need d < n - 1");
    Eigen::LLT<Eigen::MatrixXd> llt(problem.sigma);
    if (llt.info() != Eigen::Success)
        throw RegimeError("under-parameterized formulas need full-rank Sigma");
    const double noise_var = problem.noise_std * problem.noise_std;
    switch (mode) {
        case EstimatorMode::Vanilla:
            return noise_var * d / static_cast<double>(n - d - 1);
        case EstimatorMode::AugmentedInvariant:
            return noise_var * problem.d0 / static_cast<double>(n - problem.d0 - 1);
        case EstimatorMode::TestSymmetrized: {
            const Eigen::MatrixXd ratio = llt.solve(problem.sigma_inv_subspace());
            return noise_var * ratio.trace() / static_cast<double>(n - d - 1);
        }
    }
    throw ConfigError("unknown estimator mode");
}

PermTrace perm_example_trace(double sigma_inv_sq, double rho, double tau) {
    if (sigma_inv_sq <= 0.0) throw ConfigError("sigma_inv^2 must be positive");
    if (std::abs(tau) >= 1.0) throw ConfigError("|tau| must be < 1 for positive definiteness");
    if (sigma_inv_sq * (1.0 + tau) <= 2.0 * rho * rho)
        throw ConfigError("parameters violate sigma_inv^2 (1 + tau) > 2 rho^2");

    PermTrace out;
    out.closed_form = 1.0 / (1.0 - 2.0 * rho * rho / (sigma_inv_sq * (1.0 + tau)));

    Eigen::MatrixXd sigma(3, 3);
    sigma << sigma_inv_sq, rho, rho,
             rho, 1.0, tau,
             rho, tau, 1.0;
    Eigen::MatrixXd sigma_inv_sub = Eigen::MatrixXd::Zero(3, 3);
    sigma_inv_sub(0, 0) = sigma_inv_sq;  // P0 projects onto the first V-basis axis
    out.numeric = (sigma.inverse() * sigma_inv_sub).trace();

    if (std::abs(out.closed_form - out.numeric) >
        1e-10 * std::max(1.0, std::abs(out.closed_form)))
        throw NumericError("closed form and direct trace disagree beyond 1e-10");
    return out;
}

KappaFragment kappa_fixed_point(const Eigen::VectorXd& sigma_eigs, int n, double lambda) {
    if (n < 1) throw ConfigError("sample count must be positive");
    if (lambda < 0.0) throw ConfigError("ridge parameter must be >= 0");
    Eigen::VectorXd eigs = sigma_eigs.cwiseMax(0.0);
    const double trace = eigs.sum();

    auto t_of = [&](double kappa) {
        double t = 0.0;
        for (int i = 0; i < eigs.size(); ++i) t += eigs(i) / (eigs(i) + kappa);
        return t / n;
    };
    auto g_of = [&](double kappa) { return kappa * (1.0 - t_of(kappa)) - lambda; };
    // -d/dk of T is positive; g is strictly increasing
    auto g_prime = [&](double kappa) {
        double dt = 0.0;
        for (int i = 0; i < eigs.size(); ++i) {
            const double den = eigs(i) + kappa;
            dt += eigs(i) / (den * den);
        }
        return 1.0 - t_of(kappa) + kappa * dt / n;
    };

    if (lambda == 0.0) {
        const double max_eig = eigs.size() ? eigs.maxCoeff() : 0.0;
        int rank = 0;
        for (int i = 0; i < eigs.size(); ++i)
            if (eigs(i) > 1e-12 * std::max(max_eig, 1e-300)) ++rank;
        if (rank <= n)
            throw RegimeError(
                "ridgeless fixed point needs rank(Sigma)/n > 1 (over-parameterized)");
    }
    if (trace == 0.0) {
        if (lambda == 0.0) throw RegimeError("zero covariance has no ridgeless fixed point");
        return {lambda, 0.0};
    }

    double lo = std::max(lambda, 1e-12);
    double hi = lambda + trace / n;
    if (g_of(lo) > 0.0) lo = std::min(lo, 1e-300);  // lambda = 0, tiny bracket floor
    // bisection: g(lo) <= 0 <= g(hi)
    for (int it = 0; it < 200 && (hi - lo) > 1e-16 * std::max(1.0, hi); ++it) {
        const double mid = 0.5 * (lo + hi);
        (g_of(mid) < 0.0 ? lo : hi) = mid;
    }
    double kappa = 0.5 * (lo + hi);
    for (int it = 0; it < 8; ++it) {  // Newton polish inside the bracket
        const double step = g_of(kappa) / g_prime(kappa);
        const double next = kappa - step;
        if (!(next > 0.0) || !std::isfinite(next) || next < 0.5 * lo || next > 2.0 * hi) break;
        kappa = next;
    }
    KappaFragment frag;
    frag.kappa = kappa;
    frag.t_at_kappa = t_of(kappa);
    return frag;
}

KappaFragment kappa_fixed_point(const Eigen::MatrixXd& sigma, int n, double lambda) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sigma);
    return kappa_fixed_point(eig.eigenvalues(), n, lambda);
}

AsymptoticSpec deterministic_risk(const RidgeProblem& problem, EstimatorMode mode) {
    problem.validate();
    const int d = problem.d();
    const double n = static_cast<double>(problem.n);
    const Eigen::MatrixXd sigma_inv_sub = problem.sigma_inv_subspace();
    const Eigen::MatrixXd& sigma_mu =
        mode == EstimatorMode::AugmentedInvariant ? sigma_inv_sub : problem.sigma;
    const Eigen::MatrixXd& sigma_nu =
        mode == EstimatorMode::Vanilla ? problem.sigma : sigma_inv_sub;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sigma_mu);
    const Eigen::VectorXd vals = eig.eigenvalues().cwiseMax(0.0);
    const Eigen::MatrixXd& q = eig.eigenvectors();

    AsymptoticSpec spec;
    spec.gamma = d / n;
    spec.gamma0 = problem.d0 / n;
    const KappaFragment frag = kappa_fixed_point(vals, problem.n, problem.lambda);
    spec.kappa = frag.kappa;
    spec.t_at_kappa = frag.t_at_kappa;
    const double kappa = frag.kappa;

    const Eigen::MatrixXd nu_in_q = q.transpose() * sigma_nu * q;
    double alpha_mn = 0.0, alpha_mm = 0.0;
    for (int i = 0; i < d; ++i) {
        const double den = (vals(i) + kappa) * (vals(i) + kappa);
        alpha_mn += vals(i) * nu_in_q(i, i) / den;
        alpha_mm += vals(i) * vals(i) / den;
    }
    spec.alpha_mu_nu = alpha_mn / n;
    spec.alpha_mu_mu = alpha_mm / n;

    if (spec.alpha_mu_mu >= 1.0 - 1e-12) {
        spec.diverged = true;
        spec.bias = spec.variance = spec.risk = std::numeric_limits<double>::infinity();
        return spec;
    }

    const Eigen::VectorXd beta_q = q.transpose() * problem.beta;
    double quad_m2 = 0.0;  // beta^T (Sigma_mu + kappa)^-2 Sigma_mu beta
    Eigen::VectorXd res_beta(d);  // (Sigma_mu + kappa)^-1 beta, in eigenbasis
    for (int i = 0; i < d; ++i) {
        const double den = vals(i) + kappa;
        quad_m2 += beta_q(i) * beta_q(i) * vals(i) / (den * den);
        res_beta(i) = beta_q(i) / den;
    }
    double quad_nu = 0.0;  // beta^T (Sigma_mu+kappa)^-1 Sigma_nu (Sigma_mu+kappa)^-1 beta
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) quad_nu += res_beta(i) * nu_in_q(i, j) * res_beta(j);

    const double noise_var = problem.noise_std * problem.noise_std;
    spec.bias = kappa * kappa * spec.alpha_mu_nu / (1.0 - spec.alpha_mu_mu) * quad_m2 +
                kappa * kappa * quad_nu;
    spec.variance = noise_var * spec.alpha_mu_nu / (1.0 - spec.alpha_mu_mu);
    spec.risk = spec.bias + spec.variance;
    return spec;
}

MinimalClosedForm minimal_model_closed_forms(double s, double w, double g, double gamma_c) {
    if (!(g > gamma_c)) throw ConfigError("closed forms need g > gamma_c");
    if (s <= 0.0 || w < 0.0 || gamma_c <= 0.0) throw ConfigError("invalid minimal model scales");
    const double b = (s + w) - gamma_c * s + (g - gamma_c) * w;
    const double c = (1.0 - g) * s * w;
    const double disc = b * b - 4.0 * c;
    const double root = (-b + std::sqrt(std::max(disc, 0.0))) / 2.0;
    MinimalClosedForm out;
    out.kappa = std::max(0.0, root);

    auto sq_factor = [&](double e) {
        if (e <= 0.0) return 0.0;  // pinv convention: zero modes drop out
        const double f = e / (e + out.kappa);
        return f * f;
    };
    out.alpha = gamma_c * sq_factor(s) + (g - gamma_c) * sq_factor(w);
    return out;
}

Theorem3Report theorem3_limits(const MinimalModel& model, double gamma, double gamma0,
                               double gamma_c, const Eigen::VectorXd& beta) {
    if (gamma <= 1.0 || gamma0 <= gamma_c)
        throw ConfigError("theorem limits need gamma > 1 and gamma0 > gamma_c");
    Theorem3Report rep;
    const double norm2 = beta.squaredNorm();
    if (norm2 <= 0.0) throw ConfigError("ground truth must be nonzero");
    double c_beta = 0.0;
    for (int k = 0; k < model.v0_partners.cols(); ++k) {
        const double proj = model.v0_partners.col(k).dot(beta);
        c_beta += proj * proj;
    }
    c_beta /= norm2;
    rep.coupling_factor = c_beta;
    rep.half_condition = (gamma0 - gamma_c / 2.0) < 0.5;

    if (gamma_c > 1.0) {
        rep.shared_bias_limit =
            model.sigma_c * (gamma_c - 1.0) * c_beta * norm2 / (2.0 * gamma_c);
        rep.biases_vanish = false;
        rep.alpha_vanilla_limit = 1.0 / gamma_c;
        rep.alpha_augmented_limit = 1.0 / gamma_c;
        rep.augmented_variance_larger = rep.half_condition;
    } else {
        rep.shared_bias_limit = 0.0;
        rep.biases_vanish = true;
        rep.alpha_vanilla_limit =
            gamma_c + (1.0 - gamma_c) * (1.0 - gamma_c) / (gamma - gamma_c);
        rep.alpha_augmented_limit =
            gamma_c + (1.0 - gamma_c) * (1.0 - gamma_c) / (gamma0 - gamma_c);
        rep.augmented_variance_larger = rep.alpha_augmented_limit > rep.alpha_vanilla_limit;
    }
    return rep;
}

MonteCarloRisk monte_carlo_risk(const RidgeProblem& problem, EstimatorMode mode, int trials,
                                std::uint64_t seed, int workers) {
    problem.validate();
    if (trials < 1) throw ConfigError("Monte Carlo needs trials >= 1");
    const int d = problem.d();
    const int n = problem.n;
    const Eigen::MatrixXd chol = psd_cholesky(problem.sigma);

    MonteCarloRisk result;
    result.risks.resize(trials);
    parallel_for(trials, workers, [&](int t) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
        Eigen::MatrixXd z(n, d);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < d; ++j) z(i, j) = rng.normal();
        const Eigen::MatrixXd x = z * chol.transpose();
        Eigen::VectorXd y = x * problem.beta;
        for (int i = 0; i < n; ++i) y(i) += problem.noise_std * rng.normal();
        const Eigen::VectorXd beta_hat = fit(x, y, problem.lambda, mode, problem.p0);
        const Eigen::VectorXd diff = problem.beta - beta_hat;
        result.risks[t] = diff.dot(problem.sigma * diff);
    });
    result.mean_risk = mean(result.risks);
    result.std_risk = sample_std(result.risks);
    return result;
}

const char* mode_name(EstimatorMode mode) {
    switch (mode) {
        case EstimatorMode::Vanilla:
            return "vanilla";
        case EstimatorMode::TestSymmetrized:
            return "symmetrized";
        case EstimatorMode::AugmentedInvariant:
            return "augmented";
    }
    return "unknown";
}

}  // namespace symbreak
