#include "symbreak/synthdata.hpp"

#include <cmath>

namespace symbreak {

void OrbitDistribution::validate() const {
    if (orbit_size < 1 || weights.size() != orbit_size)
        throw ConfigError("orbit distribution needs weights of length orbit_size");
    double total = 0.0;
    for (int i = 0; i < weights.size(); ++i) {
        if (weights(i) < -1e-12) throw ConfigError("orbit weights must be nonnegative");
        total += weights(i);
    }
    if (std::abs(total - 1.0) > 1e-9)
        throw ConfigError("orbit weights must sum to 1");
}

OrbitDistribution OrbitDistribution::uniform(int r) {
    OrbitDistribution d;
    d.orbit_size = r;
    d.weights = Eigen::VectorXd::Constant(r, 1.0 / r);
    return d;
}

OrbitDistribution OrbitDistribution::one_hot(int r, int index) {
    OrbitDistribution d;
    d.orbit_size = r;
    d.weights = Eigen::VectorXd::Zero(r);
    d.weights(index) = 1.0;
    return d;
}

namespace {

LabeledDataset split_and_transform(const LabeledDataset& raw, const GroupAction& group,
                                   Rng& rng) {
    const int n = raw.size();
    LabeledDataset out = raw;
    out.label_space = LabelSpace::Binary;
    out.n_classes = 2;
    const auto order = rng.permutation(n);
    const int n0 = n / 2;  // floor(n/2) keep label 0, the rest transformed
    for (int pos = 0; pos < n; ++pos) {
        DataItem& item = out.items[order[pos]];
        if (pos < n0) {
            item.label = 0.0;
        } else {
            item.label = 1.0;
            item.x = group.apply_cloud(group.sample(rng), item.x);
        }
    }
    return out;
}

}  // namespace

DetectionDataset build_detection_dataset(const LabeledDataset& raw_train,
                                         const LabeledDataset& raw_test,
                                         const GroupAction& group, std::uint64_t seed) {
    if (raw_train.empty() || raw_test.empty())
        throw DatasetError("detection dataset needs nonempty train and test inputs");
    DetectionDataset out{LabeledDataset{}, LabeledDataset{}, group, seed};
    Rng rng_train(derive_seed(seed, 0));
    Rng rng_test(derive_seed(seed, 1));
    out.train = split_and_transform(raw_train, group, rng_train);
    out.test = split_and_transform(raw_test, group, rng_test);
    return out;
}

LabeledDataset swiss_roll(int n, double p, std::uint64_t seed) {
    if (p < 0.0 || p > 1.0) throw ConfigError("swiss roll fraction p must lie in [0, 1]");
    // spiral (t cos t, t sin t), t in [1.5pi, 4.5pi]; class 1 rotated by pi
    // in-plane; base level z = 0, separated level z = 1, z jitter 0.05
    constexpr double t_lo = 1.5 * M_PI, t_hi = 4.5 * M_PI;
    constexpr double z_jitter = 0.05;
    Rng rng(seed);
    LabeledDataset data;
    data.is_cloud = false;
    data.point_dim = 3;
    data.label_space = LabelSpace::Binary;
    data.items.reserve(n);
    for (int i = 0; i < n; ++i) {
        const int cls = i % 2;
        const double t = rng.uniform(t_lo, t_hi);
        const double sgn = cls == 0 ? 1.0 : -1.0;  // rotation by pi
        double z = rng.normal() * z_jitter;
        if (cls == 1 && rng.u01() < p) z += 1.0;
        DataItem item;
        item.x.resize(1, 3);
        item.x << sgn * t * std::cos(t), sgn * t * std::sin(t), z;
        item.label = cls;
        data.items.push_back(std::move(item));
    }
    return data;
}

LabeledDataset orbit_dataset(const GroupAction& group, const Eigen::VectorXd& x0,
                             const OrbitDistribution& dist, int n, std::uint64_t seed) {
    dist.validate();
    if (!group.enumerable() || group.element_count() != dist.orbit_size)
        throw ConfigError("orbit distribution size must equal the group order");
    Rng rng(seed);
    LabeledDataset data;
    data.is_cloud = false;
    data.point_dim = static_cast<int>(x0.size());
    data.label_space = LabelSpace::Classes;
    data.n_classes = dist.orbit_size;
    data.items.reserve(n);
    // cache the orbit once
    std::vector<Eigen::VectorXd> orbit;
    orbit.reserve(dist.orbit_size);
    for (int i = 0; i < dist.orbit_size; ++i)
        orbit.push_back(group.apply_vector(group.element(i), x0));
    for (int s = 0; s < n; ++s) {
        double u = rng.u01();
        int pick = dist.orbit_size - 1;
        for (int i = 0; i < dist.orbit_size; ++i) {
            u -= dist.weights(i);
            if (u < 0.0) {
                pick = i;
                break;
            }
        }
        DataItem item;
        item.x = orbit[pick].transpose();
        item.label = pick;
        data.items.push_back(std::move(item));
    }
    return data;
}

LabeledDataset canonicalized_clouds(int n_clouds, int m_points, double anisotropy,
                                    std::uint64_t seed) {
    if (anisotropy < 1.0) throw ConfigError("anisotropy must be >= 1");
    if (n_clouds < 1 || m_points < 1) throw ConfigError("cloud counts must be positive");
    Rng rng(seed);
    const double principal_std = std::sqrt(anisotropy);
    LabeledDataset data;
    data.is_cloud = true;
    data.point_dim = 3;
    data.label_space = LabelSpace::Binary;
    data.items.reserve(n_clouds);
    for (int c = 0; c < n_clouds; ++c) {
        DataItem item;
        item.x.resize(m_points, 3);
        for (int r = 0; r < m_points; ++r) {
            item.x(r, 0) = principal_std * rng.normal();
            item.x(r, 1) = rng.normal();
            item.x(r, 2) = rng.normal();
        }
        item.label = 0.0;
        data.items.push_back(std::move(item));
    }
    return data;
}

MinimalModel minimal_model_covariance(int d, int d0, int d_c, double sigma_c,
                                      double sigma_w, const GroupAction& group) {
    if (!(sigma_c > sigma_w) || sigma_w < 0.0)
        throw ConfigError("minimal model needs sigma_c > sigma_w >= 0");
    if (!(d_c < std::min(d0, d - d0)) || d_c < 1)
        throw ConfigError("minimal model needs 1 <= d_c < min(d0, d - d0)");
    if (group.dim() != d) throw ConfigError("group dimension must equal d");
    if (group.invariant_dim() != d0)
        throw ConfigError("group invariant dimension must equal d0");

    const InvariantBasis& basis = group.invariant_basis();
    MinimalModel model;
    model.sigma_c = sigma_c;
    model.sigma_w = sigma_w;
    model.d_c = d_c;
    model.coupling_modes.resize(d, d_c);
    model.v0_partners.resize(d, d_c);
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    for (int k = 0; k < d_c; ++k) {
        model.v0_partners.col(k) = basis.v0.col(k);
        model.coupling_modes.col(k) =
            inv_sqrt2 * (basis.v0.col(k) + basis.vperp.col(k));
    }
    model.sigma = sigma_w * Eigen::MatrixXd::Identity(d, d) +
                  (sigma_c - sigma_w) * model.coupling_modes * model.coupling_modes.transpose();
    return model;
}

Eigen::MatrixXd psd_cholesky(const Eigen::MatrixXd& sigma) {
    const int d = static_cast<int>(sigma.rows());
    Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    if (llt.info() == Eigen::Success) return llt.matrixL();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sigma);
    if (eig.eigenvalues().minCoeff() < -1e-8)
        throw NumericError("covariance is not positive semi-definite");
    Eigen::LLT<Eigen::MatrixXd> jittered(sigma +
                                         1e-12 * Eigen::MatrixXd::Identity(d, d));
    if (jittered.info() != Eigen::Success)
        throw NumericError("Cholesky failed even with diagonal jitter");
    return jittered.matrixL();
}

RegressionSample gaussian_regression_sample(const Eigen::MatrixXd& sigma,
                                            const Eigen::VectorXd& beta, double noise_std,
                                            int n, std::uint64_t seed) {
    if (sigma.rows() != sigma.cols() || sigma.rows() != beta.size())
        throw DimensionError("covariance and ground truth shapes disagree");
    const int d = static_cast<int>(sigma.rows());
    const Eigen::MatrixXd chol = psd_cholesky(sigma);
    Rng rng(seed);
    RegressionSample out;
    out.x.resize(n, d);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) out.x(i, j) = rng.normal();
    out.x = out.x * chol.transpose();
    out.y = out.x * beta;
    for (int i = 0; i < n; ++i) out.y(i) += noise_std * rng.normal();
    return out;
}

Eigen::VectorXd invariant_beta(const GroupAction& group, int d, double norm,
                               std::uint64_t seed) {
    if (group.dim() != d) throw ConfigError("group dimension must equal d");
    const Eigen::MatrixXd& p0 = group.invariant_projection();
    if (group.invariant_dim() == 0)
        throw ConfigError("group has no invariant direction (d0 = 0)");
    Rng rng(seed);
    Eigen::VectorXd z(d);
    Eigen::VectorXd projected;
    do {
        for (int i = 0; i < d; ++i) z(i) = rng.normal();
        projected = p0 * z;
    } while (projected.norm() < 1e-12);
    return projected * (norm / projected.norm());
}

}  // namespace symbreak
