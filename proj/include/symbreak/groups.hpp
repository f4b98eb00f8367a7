#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "symbreak/errors.hpp"
#include "symbreak/rng.hpp"

namespace symbreak {

enum class GroupKind {
    FiniteMatrix,   // explicit list of orthogonal d x d matrices
    Cyclic2D,       // planar rotations by multiples of 2*pi/r
    VerticalShift,  // Z2 level swap along the z axis of 3d points
    SO3,            // continuous rotations acting row-wise on m x 3 clouds
    PermuteFirstM,  // symmetric group S_m on the first m of d coordinates
};

/// One group element. Which fields are meaningful depends on the action kind:
/// matrix kinds use `linear` (+ `offset` for the affine VerticalShift),
/// PermuteFirstM stores the permutation of the first m coordinates, and
/// enumerable kinds also carry their element index for one-hot encodings.
struct GroupElement {
    Eigen::MatrixXd linear;
    Eigen::VectorXd offset;
    std::vector<int> perm;
    int index = -1;
};

/// Basis of the invariant subspace V0 and its orthogonal complement, columns
/// orthonormal, sign-fixed so the decomposition is reproducible.
struct InvariantBasis {
    Eigen::MatrixXd v0;     // d x d0
    Eigen::MatrixXd vperp;  // d x (d - d0)
};

/// A compact group together with its action on vectors or point clouds.
/// Immutable after construction; all operations are const and take an
/// explicit generator where they sample.
class GroupAction {
public:
    static GroupAction trivial(int dim);
    static GroupAction finite_matrix(std::vector<Eigen::MatrixXd> elements);
    static GroupAction cyclic_rotation_2d(int order);
    static GroupAction vertical_shift(double dz);
    static GroupAction so3();
    static GroupAction permute_first_m(int m, int dim);
    /// S_d permuting all coordinates.
    static GroupAction full_permutation(int dim);
    /// C4 quarter-turn rotations of a side x side grid, as a FiniteMatrix
    /// permutation action on flattened grids.
    static GroupAction grid_quarter_turns(int side);

    GroupKind kind() const { return kind_; }
    /// Ambient dimension of the linear action (2 for Cyclic2D point action,
    /// 3 for SO3/VerticalShift, d for matrix kinds).
    int dim() const { return dim_; }
    bool is_finite() const { return kind_ != GroupKind::SO3; }
    /// Group cardinality. Throws for SO3 (infinite) and for PermuteFirstM
    /// with m > 20 (m! overflows); check is_finite()/enumerable() first.
    std::uint64_t order() const;
    /// True when every element can be materialized (order small enough for
    /// element(i), exhaustive checks and one-hot encodings).
    bool enumerable() const;
    int element_count() const;

    GroupElement identity() const;
    GroupElement element(int idx) const;
    /// Haar-uniform sample. Finite kinds: uniform over elements; SO3: unit
    /// quaternion from a normalized 4d standard Gaussian.
    GroupElement sample(Rng& rng) const;

    GroupElement compose(const GroupElement& a, const GroupElement& b) const;
    GroupElement inverse(const GroupElement& g) const;
    bool approx_equal(const GroupElement& a, const GroupElement& b, double tol = 1e-10) const;

    Eigen::VectorXd apply_vector(const GroupElement& g, const Eigen::VectorXd& x) const;
    /// Row-wise action on a cloud (rows = points). Matrix kinds accept a
    /// single 1 x d row; geometric kinds accept m x point_dim.
    Eigen::MatrixXd apply_cloud(const GroupElement& g, const Eigen::MatrixXd& x) const;

    bool has_matrix_rep() const {
        return kind_ == GroupKind::FiniteMatrix || kind_ == GroupKind::Cyclic2D ||
               kind_ == GroupKind::PermuteFirstM;
    }

    /// P0 = (1/r) sum_g g, the orthogonal projection onto V0.
    /// Finite matrix kinds only.
    const Eigen::MatrixXd& invariant_projection() const;
    int invariant_dim() const;
    /// E_g[g S g^T]. Finite matrix kinds only; PermuteFirstM uses the exact
    /// closed form so it never enumerates m! elements.
    Eigen::MatrixXd symmetrize_covariance(const Eigen::MatrixXd& s) const;
    /// Orthonormal (V0, Vperp) bases from the eigendecomposition of P0,
    /// eigenvalue threshold 0.5, first nonzero component of each vector
    /// made positive.
    const InvariantBasis& invariant_basis() const;

    /// Parse the short text form used in configs: `trivial`, `c<r>`, `so3`,
    /// `shift:z=<dz>`, `perm:first=<m>`, `perm:all`, `gridrot:side=<k>`.
    /// `ambient_dim` supplies d where the form does not determine it.
    static GroupAction parse(const std::string& spec, int ambient_dim = 0);

private:
    GroupAction() = default;
    void require_matrix_kind(const char* op) const;
    /// Builds P0 and the (V0, Vperp) bases; called once from the factories
    /// so instances are immutable and freely shared across threads.
    void finalize();

    GroupKind kind_ = GroupKind::FiniteMatrix;
    int dim_ = 0;
    int perm_m_ = 0;    // PermuteFirstM block size
    double dz_ = 0.0;   // VerticalShift level separation
    std::vector<Eigen::MatrixXd> elements_;  // FiniteMatrix / Cyclic2D
    std::shared_ptr<const Eigen::MatrixXd> p0_;
    std::shared_ptr<const InvariantBasis> basis_;
};

}  // namespace symbreak
