#include "symbreak/mmd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "symbreak/parallel.hpp"

namespace symbreak {

namespace {

/// Directed nearest-neighbor distances from each row of a to rows of b.
Eigen::VectorXd directed_min_distances(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    Eigen::VectorXd out(a.rows());
    for (int i = 0; i < a.rows(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (int j = 0; j < b.rows(); ++j) {
            const double d2 = (a.row(i) - b.row(j)).squaredNorm();
            if (d2 < best) best = d2;
        }
        out(i) = std::sqrt(best);
    }
    return out;
}

Eigen::VectorXd naive_embedding(const Eigen::MatrixXd& pts) {
    const int k = static_cast<int>(pts.cols());
    const double count = static_cast<double>(pts.rows());
    Eigen::VectorXd mean = pts.colwise().sum() / count;
    Eigen::MatrixXd second = pts.transpose() * pts / count;
    Eigen::VectorXd e(k + k * k);
    e.head(k) = mean;
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) e(k + i * k + j) = second(i, j);
    return e;
}

double base_distance(KernelKind kind, const Eigen::MatrixXd& px, const Eigen::MatrixXd& py) {
    switch (kind) {
        case KernelKind::NaiveMeanCov:
            return (naive_embedding(px) - naive_embedding(py)).norm();
        case KernelKind::Chamfer: {
            const Eigen::VectorXd d1 = directed_min_distances(px, py);
            const Eigen::VectorXd d2 = directed_min_distances(py, px);
            return 0.5 * (d1.mean() + d2.mean());
        }
        case KernelKind::Hausdorff: {
            const Eigen::VectorXd d1 = directed_min_distances(px, py);
            const Eigen::VectorXd d2 = directed_min_distances(py, px);
            return std::max(d1.maxCoeff(), d2.maxCoeff());
        }
    }
    throw ConfigError("unknown kernel kind");
}

}  // namespace

double kernel_value(const KernelSpec& spec, const DataItem& x, const DataItem& y) {
    spec.validate();
    const Eigen::MatrixXd px = x.valid_rows();
    const Eigen::MatrixXd py = y.valid_rows();
    if (px.rows() == 0 || py.rows() == 0)
        throw DatasetError("kernel input cloud is empty after masking");
    if (px.cols() != py.cols()) throw DimensionError("clouds disagree on point dimension");
    const double dist = base_distance(spec.kind, px, py);
    if (spec.kind == KernelKind::NaiveMeanCov)
        return std::exp(-dist * dist / spec.sigma);
    return std::exp(-dist / (2.0 * spec.sigma * spec.sigma));
}

MMDResult mmd(const std::vector<DataItem>& x, const std::vector<DataItem>& y,
              const KernelSpec& spec, int workers) {
    spec.validate();
    const int nx = static_cast<int>(x.size());
    const int ny = static_cast<int>(y.size());
    if (nx < 1 || ny < 1) throw DatasetError("mmd needs at least one cloud per set");

    // one kernel matrix per term, filled row-parallel, summed sequentially;
    // identical loops for the three terms make mmd(X, X) exactly zero
    auto term_mean = [&](const std::vector<DataItem>& a, const std::vector<DataItem>& b) {
        const int na = static_cast<int>(a.size());
        const int nb = static_cast<int>(b.size());
        Eigen::MatrixXd k(na, nb);
        parallel_for(na, workers, [&](int i) {
            for (int j = 0; j < nb; ++j) k(i, j) = kernel_value(spec, a[i], b[j]);
        });
        double sum = 0.0;
        for (int i = 0; i < na; ++i)
            for (int j = 0; j < nb; ++j) sum += k(i, j);
        return sum / (static_cast<double>(na) * static_cast<double>(nb));
    };

    MMDResult result;
    result.xx_mean = term_mean(x, x);
    result.yy_mean = term_mean(y, y);
    result.xy_mean = term_mean(x, y);
    result.value = result.xx_mean + result.yy_mean - 2.0 * result.xy_mean;
    return result;
}

double median_heuristic_sigma(const std::vector<DataItem>& clouds, KernelKind kind,
                              Rng& rng, int pairs) {
    const int n = static_cast<int>(clouds.size());
    if (n < 2) throw DatasetError("median heuristic needs at least two clouds");
    std::vector<double> dists;
    dists.reserve(pairs);
    for (int p = 0; p < pairs; ++p) {
        const int i = rng.index(n);
        int j = rng.index(n - 1);
        if (j >= i) ++j;
        dists.push_back(base_distance(kind, clouds[i].valid_rows(), clouds[j].valid_rows()));
    }
    std::nth_element(dists.begin(), dists.begin() + dists.size() / 2, dists.end());
    const double med = dists[dists.size() / 2];
    return med > 1e-12 ? med : 1.0;
}

}  // namespace symbreak
