#include "symbreak/groups.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace symbreak {

namespace {

constexpr std::uint64_t kEnumerableCap = 40320;  // 8!

std::uint64_t factorial_u64(int m) {
    std::uint64_t f = 1;
    for (int i = 2; i <= m; ++i) f *= static_cast<std::uint64_t>(i);
    return f;
}

/// idx-th permutation of {0..m-1} in lexicographic order (Lehmer code).
std::vector<int> nth_permutation(int m, std::uint64_t idx) {
    std::vector<int> pool(m);
    std::iota(pool.begin(), pool.end(), 0);
    std::vector<int> out;
    out.reserve(m);
    std::uint64_t f = factorial_u64(m);
    for (int i = m; i > 0; --i) {
        f /= static_cast<std::uint64_t>(i);
        const auto k = idx / f;
        idx %= f;
        out.push_back(pool[k]);
        pool.erase(pool.begin() + static_cast<long>(k));
    }
    return out;
}

Eigen::MatrixXd rotation2d(double angle) {
    Eigen::MatrixXd r(2, 2);
    const double c = std::cos(angle), s = std::sin(angle);
    r << c, -s, s, c;
    return r;
}

Eigen::MatrixXd quaternion_to_matrix(double w, double x, double y, double z) {
    Eigen::MatrixXd r(3, 3);
    r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
         2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
         2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
    return r;
}

}  // namespace

GroupAction GroupAction::trivial(int dim) {
    if (dim <= 0) throw ConfigError("trivial group needs dim >= 1");
    std::vector<Eigen::MatrixXd> el{Eigen::MatrixXd::Identity(dim, dim)};
    return finite_matrix(std::move(el));
}

GroupAction GroupAction::finite_matrix(std::vector<Eigen::MatrixXd> elements) {
    if (elements.empty()) throw ConfigError("finite group needs at least the identity");
    const int d = static_cast<int>(elements.front().rows());
    for (const auto& g : elements) {
        if (g.rows() != d || g.cols() != d)
            throw DimensionError("group elements must share a square shape");
        if ((g.transpose() * g - Eigen::MatrixXd::Identity(d, d)).norm() > 1e-10)
            throw ConfigError("group element is not orthogonal");
    }
    GroupAction a;
    a.kind_ = GroupKind::FiniteMatrix;
    a.dim_ = d;
    a.elements_ = std::move(elements);
    a.finalize();
    return a;
}

GroupAction GroupAction::cyclic_rotation_2d(int order) {
    if (order < 1) throw ConfigError("cyclic group order must be >= 1");
    GroupAction a;
    a.kind_ = GroupKind::Cyclic2D;
    a.dim_ = 2;
    a.elements_.reserve(order);
    for (int k = 0; k < order; ++k)
        a.elements_.push_back(rotation2d(2.0 * M_PI * k / order));
    a.finalize();
    return a;
}

GroupAction GroupAction::vertical_shift(double dz) {
    if (dz == 0.0) throw ConfigError("vertical shift needs a nonzero level separation");
    GroupAction a;
    a.kind_ = GroupKind::VerticalShift;
    a.dim_ = 3;
    a.dz_ = dz;
    return a;
}

GroupAction GroupAction::so3() {
    GroupAction a;
    a.kind_ = GroupKind::SO3;
    a.dim_ = 3;
    return a;
}

GroupAction GroupAction::permute_first_m(int m, int dim) {
    if (m < 1 || m > dim) throw ConfigError("permuted block must satisfy 1 <= m <= dim");
    GroupAction a;
    a.kind_ = GroupKind::PermuteFirstM;
    a.dim_ = dim;
    a.perm_m_ = m;
    a.finalize();
    return a;
}

GroupAction GroupAction::full_permutation(int dim) { return permute_first_m(dim, dim); }

GroupAction GroupAction::grid_quarter_turns(int side) {
    if (side < 1) throw ConfigError("grid side must be >= 1");
    const int d = side * side;
    // (i, j) -> (j, side-1-i) is a 90 degree turn; build its permutation
    // matrix and powers.
    Eigen::MatrixXd quarter = Eigen::MatrixXd::Zero(d, d);
    for (int i = 0; i < side; ++i)
        for (int j = 0; j < side; ++j) {
            const int src = i * side + j;
            const int dst = j * side + (side - 1 - i);
            quarter(dst, src) = 1.0;
        }
    std::vector<Eigen::MatrixXd> els;
    Eigen::MatrixXd g = Eigen::MatrixXd::Identity(d, d);
    for (int k = 0; k < 4; ++k) {
        els.push_back(g);
        g = quarter * g;
    }
    return finite_matrix(std::move(els));
}

void GroupAction::finalize() {
    if (!has_matrix_rep()) return;
    Eigen::MatrixXd p0;
    if (kind_ == GroupKind::PermuteFirstM) {
        // averaging S_m permutation matrices gives the all-ones block
        p0 = Eigen::MatrixXd::Identity(dim_, dim_);
        p0.topLeftCorner(perm_m_, perm_m_).setConstant(1.0 / perm_m_);
    } else {
        p0 = Eigen::MatrixXd::Zero(dim_, dim_);
        for (const auto& g : elements_) p0 += g;
        p0 /= static_cast<double>(elements_.size());
    }
    p0_ = std::make_shared<const Eigen::MatrixXd>(std::move(p0));

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(
        0.5 * (*p0_ + p0_->transpose()));
    if (eig.info() != Eigen::Success)
        throw NumericError("eigendecomposition of the invariant projection failed");
    InvariantBasis basis;
    const auto& vals = eig.eigenvalues();
    const auto& vecs = eig.eigenvectors();
    int d0 = 0;
    for (int i = 0; i < dim_; ++i)
        if (vals(i) > 0.5) ++d0;
    basis.v0.resize(dim_, d0);
    basis.vperp.resize(dim_, dim_ - d0);
    int i0 = 0, ip = 0;
    for (int i = 0; i < dim_; ++i) {
        Eigen::VectorXd v = vecs.col(i);
        for (int k = 0; k < dim_; ++k) {
            if (std::abs(v(k)) > 1e-8) {
                if (v(k) < 0) v = -v;
                break;
            }
        }
        if (vals(i) > 0.5)
            basis.v0.col(i0++) = v;
        else
            basis.vperp.col(ip++) = v;
    }
    basis_ = std::make_shared<const InvariantBasis>(std::move(basis));
}

std::uint64_t GroupAction::order() const {
    switch (kind_) {
        case GroupKind::FiniteMatrix:
        case GroupKind::Cyclic2D:
            return elements_.size();
        case GroupKind::VerticalShift:
            return 2;
        case GroupKind::PermuteFirstM:
            if (perm_m_ > 20)
                throw ConfigError("group order m! does not fit a 64-bit integer");
            return factorial_u64(perm_m_);
        case GroupKind::SO3:
            throw ConfigError("SO(3) is infinite; no finite order");
    }
    throw ConfigError("unknown group kind");
}

bool GroupAction::enumerable() const {
    if (!is_finite()) return false;
    if (kind_ == GroupKind::PermuteFirstM)
        return perm_m_ <= 8 && factorial_u64(perm_m_) <= kEnumerableCap;
    return true;
}

int GroupAction::element_count() const {
    if (!enumerable()) throw ConfigError("group is not enumerable");
    return static_cast<int>(order());
}

GroupElement GroupAction::identity() const {
    GroupElement e;
    e.index = 0;
    switch (kind_) {
        case GroupKind::FiniteMatrix:
        case GroupKind::Cyclic2D:
            e.linear = elements_.front();
            break;
        case GroupKind::SO3:
            e.linear = Eigen::MatrixXd::Identity(3, 3);
            e.index = -1;
            break;
        case GroupKind::VerticalShift:
            e.linear = Eigen::MatrixXd::Identity(3, 3);
            e.offset = Eigen::VectorXd::Zero(3);
            break;
        case GroupKind::PermuteFirstM:
            e.perm.resize(perm_m_);
            std::iota(e.perm.begin(), e.perm.end(), 0);
            break;
    }
    return e;
}

GroupElement GroupAction::element(int idx) const {
    if (!enumerable()) throw ConfigError("group is not enumerable");
    const int r = element_count();
    if (idx < 0 || idx >= r) throw ConfigError("element index out of range");
    GroupElement g;
    g.index = idx;
    switch (kind_) {
        case GroupKind::FiniteMatrix:
        case GroupKind::Cyclic2D:
            g.linear = elements_[idx];
            break;
        case GroupKind::VerticalShift: {
            // the nontrivial element reflects z about the level midpoint,
            // swapping levels 0 and dz; an exact involution
            g.linear = Eigen::MatrixXd::Identity(3, 3);
            g.offset = Eigen::VectorXd::Zero(3);
            if (idx == 1) {
                g.linear(2, 2) = -1.0;
                g.offset(2) = dz_;
            }
            break;
        }
        case GroupKind::PermuteFirstM:
            g.perm = nth_permutation(perm_m_, static_cast<std::uint64_t>(idx));
            break;
        case GroupKind::SO3:
            throw ConfigError("SO(3) elements cannot be enumerated");
    }
    return g;
}

GroupElement GroupAction::sample(Rng& rng) const {
    switch (kind_) {
        case GroupKind::FiniteMatrix:
        case GroupKind::Cyclic2D:
            return element(rng.index(static_cast<int>(elements_.size())));
        case GroupKind::VerticalShift:
            return element(rng.index(2));
        case GroupKind::PermuteFirstM: {
            GroupElement g;
            g.perm.resize(perm_m_);
            std::iota(g.perm.begin(), g.perm.end(), 0);
            rng.shuffle(g.perm);
            if (enumerable()) {
                // recover the index so one-hot encodings stay available
                std::vector<int> pool(perm_m_);
                std::iota(pool.begin(), pool.end(), 0);
                std::uint64_t idx = 0;
                for (int i = 0; i < perm_m_; ++i) {
                    const auto it = std::find(pool.begin(), pool.end(), g.perm[i]);
                    const auto k = static_cast<std::uint64_t>(it - pool.begin());
                    idx = idx * static_cast<std::uint64_t>(perm_m_ - i) + k;
                    pool.erase(it);
                }
                g.index = static_cast<int>(idx);
            }
            return g;
        }
        case GroupKind::SO3: {
            double q[4];
            double norm2 = 0.0;
            do {
                norm2 = 0.0;
                for (double& c : q) {
                    c = rng.normal();
                    norm2 += c * c;
                }
            } while (norm2 < 1e-20);
            const double inv = 1.0 / std::sqrt(norm2);
            GroupElement g;
            g.linear = quaternion_to_matrix(q[0] * inv, q[1] * inv, q[2] * inv, q[3] * inv);
            return g;
        }
    }
    throw ConfigError("unknown group kind");
}

GroupElement GroupAction::compose(const GroupElement& a, const GroupElement& b) const {
    GroupElement g;
    switch (kind_) {
        case GroupKind::FiniteMatrix:
        case GroupKind::Cyclic2D: {
            if (kind_ == GroupKind::Cyclic2D && a.index >= 0 && b.index >= 0) {
                return element((a.index + b.index) % static_cast<int>(elements_.size()));
            }
            const Eigen::MatrixXd prod = a.linear * b.linear;
            for (int i = 0; i < static_cast<int>(elements_.size()); ++i)
                if ((elements_[i] - prod).cwiseAbs().maxCoeff() < 1e-8) return element(i);
            throw ConfigError("composition left the finite element set");
        }
        case GroupKind::VerticalShift:
            return element((a.index + b.index) % 2);
        case GroupKind::PermuteFirstM: {
            g.perm.resize(perm_m_);
            for (int i = 0; i < perm_m_; ++i) g.perm[i] = a.perm[b.perm[i]];
            return g;
        }
        case GroupKind::SO3:
            g.linear = a.linear * b.linear;
            return g;
    }
    throw ConfigError("unknown group kind");
}

GroupElement GroupAction::inverse(const GroupElement& g) const {
    switch (kind_) {
        case GroupKind::FiniteMatrix:
        case GroupKind::Cyclic2D: {
            if (kind_ == GroupKind::Cyclic2D && g.index >= 0) {
                const int r = static_cast<int>(elements_.size());
                return element((r - g.index) % r);
            }
            const Eigen::MatrixXd inv = g.linear.transpose();  // orthogonal
            for (int i = 0; i < static_cast<int>(elements_.size()); ++i)
                if ((elements_[i] - inv).cwiseAbs().maxCoeff() < 1e-8) return element(i);
            throw ConfigError("inverse left the finite element set");
        }
        case GroupKind::VerticalShift:
            return element(g.index);  // involution
        case GroupKind::PermuteFirstM: {
            GroupElement out;
            out.perm.resize(perm_m_);
            for (int i = 0; i < perm_m_; ++i) out.perm[g.perm[i]] = i;
            if (g.index >= 0 && enumerable()) {
                // cheap for the small enumerable case
                std::vector<int> pool(perm_m_);
                std::iota(pool.begin(), pool.end(), 0);
                std::uint64_t idx = 0;
                for (int i = 0; i < perm_m_; ++i) {
                    const auto it = std::find(pool.begin(), pool.end(), out.perm[i]);
                    idx = idx * static_cast<std::uint64_t>(perm_m_ - i) +
                          static_cast<std::uint64_t>(it - pool.begin());
                    pool.erase(it);
                }
                out.index = static_cast<int>(idx);
            }
            return out;
        }
        case GroupKind::SO3: {
            GroupElement out;
            out.linear = g.linear.transpose();
            return out;
        }
    }
    throw ConfigError("unknown group kind");
}

bool GroupAction::approx_equal(const GroupElement& a, const GroupElement& b, double tol) const {
    if (kind_ == GroupKind::PermuteFirstM) return a.perm == b.perm;
    if (kind_ == GroupKind::VerticalShift) return a.index == b.index;
    if (a.linear.rows() != b.linear.rows()) return false;
    return (a.linear - b.linear).cwiseAbs().maxCoeff() <= tol;
}

Eigen::VectorXd GroupAction::apply_vector(const GroupElement& g, const Eigen::VectorXd& x) const {
    switch (kind_) {
        case GroupKind::FiniteMatrix:
        case GroupKind::Cyclic2D:
            if (x.size() != dim_) throw DimensionError("vector length does not match action");
            return g.linear * x;
        case GroupKind::VerticalShift: {
            if (x.size() != 3) throw DimensionError("vertical shift acts on 3d points");
            Eigen::VectorXd y = g.linear * x;
            if (g.offset.size() == 3) y += g.offset;
            return y;
        }
        case GroupKind::PermuteFirstM: {
            if (x.size() != dim_) throw DimensionError("vector length does not match action");
            Eigen::VectorXd y = x;
            for (int i = 0; i < perm_m_; ++i) y(g.perm[i]) = x(i);
            return y;
        }
        case GroupKind::SO3:
            if (x.size() != 3) throw DimensionError("SO(3) acts on 3d points");
            return g.linear * x;
    }
    throw ConfigError("unknown group kind");
}

Eigen::MatrixXd GroupAction::apply_cloud(const GroupElement& g, const Eigen::MatrixXd& x) const {
    switch (kind_) {
        case GroupKind::FiniteMatrix:
        case GroupKind::PermuteFirstM: {
            // matrix kinds act on d-vectors; a cloud of such rows maps row-wise
            if (x.cols() != dim_) throw DimensionError("row length does not match action");
            Eigen::MatrixXd y(x.rows(), x.cols());
            for (int r = 0; r < x.rows(); ++r)
                y.row(r) = apply_vector(g, x.row(r).transpose()).transpose();
            return y;
        }
        case GroupKind::Cyclic2D:
            if (x.cols() != 2) throw DimensionError("planar rotation acts on m x 2 clouds");
            return x * g.linear.transpose();
        case GroupKind::SO3:
            if (x.cols() != 3) throw DimensionError("SO(3) acts on m x 3 clouds");
            return x * g.linear.transpose();
        case GroupKind::VerticalShift: {
            if (x.cols() != 3) throw DimensionError("vertical shift acts on m x 3 clouds");
            Eigen::MatrixXd y = x * g.linear.transpose();
            if (g.offset.size() == 3) y.rowwise() += g.offset.transpose();
            return y;
        }
    }
    throw ConfigError("unknown group kind");
}

void GroupAction::require_matrix_kind(const char* op) const {
    if (!has_matrix_rep())
        throw UnsupportedActionError(std::string(op) +
                                     " is only defined for finite matrix group kinds");
}

const Eigen::MatrixXd& GroupAction::invariant_projection() const {
    require_matrix_kind("invariant_projection");
    return *p0_;
}

int GroupAction::invariant_dim() const {
    require_matrix_kind("invariant_dim");
    return static_cast<int>(std::lround(p0_->trace()));
}

Eigen::MatrixXd GroupAction::symmetrize_covariance(const Eigen::MatrixXd& s) const {
    require_matrix_kind("symmetrize_covariance");
    if (s.rows() != dim_ || s.cols() != dim_)
        throw DimensionError("covariance shape does not match action dimension");
    if ((s - s.transpose()).cwiseAbs().maxCoeff() > 1e-8)
        throw ConfigError("symmetrize_covariance expects a symmetric matrix");
    if (kind_ == GroupKind::PermuteFirstM) {
        // E over S_m in closed form: within the permuted block, diagonal
        // entries average to the mean diagonal, off-diagonal entries to the
        // mean off-diagonal, and block-to-fixed columns to their block mean.
        const int m = perm_m_;
        Eigen::MatrixXd out = s;
        double diag_mean = 0.0, off_sum = 0.0;
        for (int i = 0; i < m; ++i) {
            diag_mean += s(i, i);
            for (int j = 0; j < m; ++j)
                if (j != i) off_sum += s(i, j);
        }
        diag_mean /= m;
        const double off_mean = (m > 1) ? off_sum / (static_cast<double>(m) * (m - 1)) : 0.0;
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) out(i, j) = (i == j) ? diag_mean : off_mean;
        for (int j = m; j < dim_; ++j) {
            double col_mean = 0.0;
            for (int i = 0; i < m; ++i) col_mean += s(i, j);
            col_mean /= m;
            for (int i = 0; i < m; ++i) {
                out(i, j) = col_mean;
                out(j, i) = col_mean;
            }
        }
        return out;
    }
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(dim_, dim_);
    for (const auto& g : elements_) out += g * s * g.transpose();
    return out / static_cast<double>(elements_.size());
}

const InvariantBasis& GroupAction::invariant_basis() const {
    require_matrix_kind("invariant_basis");
    return *basis_;
}

GroupAction GroupAction::parse(const std::string& spec, int ambient_dim) {
    auto need_dim = [&](const char* what) {
        if (ambient_dim <= 0)
            throw ConfigError(std::string("group spec '") + spec + "' needs an ambient dimension for " + what);
        return ambient_dim;
    };
    if (spec == "trivial") return trivial(need_dim("trivial"));
    if (spec == "so3") return so3();
    if (spec.size() > 1 && spec[0] == 'c' &&
        spec.find_first_not_of("0123456789", 1) == std::string::npos)
        return cyclic_rotation_2d(std::stoi(spec.substr(1)));
    const auto colon = spec.find(':');
    const std::string head = spec.substr(0, colon);
    const std::string tail = colon == std::string::npos ? "" : spec.substr(colon + 1);
    auto parse_kv = [&](const std::string& key) -> std::string {
        const std::string prefix = key + "=";
        if (tail.rfind(prefix, 0) == 0) return tail.substr(prefix.size());
        throw ConfigError("group spec '" + spec + "' expects " + head + ":" + key + "=<value>");
    };
    try {
        if (head == "shift") return vertical_shift(std::stod(parse_kv("z")));
        if (head == "perm") {
            if (tail == "all") return full_permutation(need_dim("perm:all"));
            return permute_first_m(std::stoi(parse_kv("first")), need_dim("perm:first"));
        }
        if (head == "gridrot") return grid_quarter_turns(std::stoi(parse_kv("side")));
    } catch (const std::invalid_argument&) {
        throw ConfigError("could not parse number in group spec '" + spec + "'");
    }
    throw ConfigError("unknown group spec '" + spec +
                      "' (expected trivial, c<r>, so3, shift:z=<dz>, perm:first=<m>, "
                      "perm:all, gridrot:side=<k>)");
}

}  // namespace symbreak
