#include "symbreak/taskdep.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace symbreak {

Canonicalizer make_random_canonicalizer(const GroupAction& group,
                                        const LabeledDataset& reference,
                                        const std::vector<int>& hidden, std::uint64_t seed) {
    if (!group.enumerable())
        throw UnsupportedActionError("canonicalization needs an enumerable finite group");
    Canonicalizer canon(group);
    canon.is_cloud = reference.is_cloud;
    canon.point_dim = reference.point_dim;
    canon.max_points = reference.is_cloud ? reference.max_points() : 1;

    MLPSpec spec;
    spec.inputs = feature_width(reference);
    spec.hidden = hidden;
    spec.outputs = 1;
    spec.head = Head::Regression;
    canon.scorer = MLPModel(spec, derive_seed(seed, 21));

    const Eigen::MatrixXd feats = featurize(reference);
    Eigen::VectorXd mean = feats.colwise().mean();
    Eigen::VectorXd sd(feats.cols());
    for (int j = 0; j < feats.cols(); ++j) {
        const double var = (feats.col(j).array() - mean(j)).square().sum() /
                           std::max<int>(1, static_cast<int>(feats.rows()) - 1);
        sd(j) = var > 1e-24 ? std::sqrt(var) : 1.0;
    }
    canon.scorer.set_input_stats(mean, sd);
    return canon;
}

int canonicalize(const Canonicalizer& canon, const DataItem& item) {
    const int r = canon.group.element_count();
    int best = 0;
    double best_score = std::numeric_limits<double>::infinity();
    for (int g = 0; g < r; ++g) {
        const GroupElement inv = canon.group.inverse(canon.group.element(g));
        DataItem moved = item;
        moved.x = canon.group.apply_cloud(inv, item.x);
        const Eigen::VectorXd f =
            featurize_item(moved, canon.is_cloud, canon.point_dim, canon.max_points);
        const double score = canon.scorer.predict(f)(0);
        if (score < best_score) {
            best_score = score;
            best = g;
        }
    }
    return best;
}

namespace {

struct SplitIndices {
    std::vector<int> train, val, test;
};

SplitIndices split_60_20_20(int n, std::uint64_t seed) {
    Rng rng(seed);
    auto order = rng.permutation(n);
    SplitIndices s;
    const int n_train = static_cast<int>(std::lround(0.6 * n));
    const int n_val = static_cast<int>(std::lround(0.2 * n));
    for (int i = 0; i < n; ++i) {
        if (i < n_train)
            s.train.push_back(order[i]);
        else if (i < n_train + n_val)
            s.val.push_back(order[i]);
        else
            s.test.push_back(order[i]);
    }
    return s;
}

int label_width(const LabeledDataset& data) {
    return data.label_space == LabelSpace::Classes ? data.n_classes : 1;
}

Eigen::VectorXd encode_label(const LabeledDataset& data, double label) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(label_width(data));
    if (data.label_space == LabelSpace::Classes)
        out(static_cast<int>(label)) = 1.0;
    else
        out(0) = label;
    return out;
}

/// Pair features: one-hot canonicalization followed by the encoded label.
Eigen::MatrixXd pair_features(const LabeledDataset& data, const std::vector<int>& canon_idx,
                              int r, const std::vector<int>& items,
                              const std::vector<int>& partners) {
    const int lw = label_width(data);
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(static_cast<int>(items.size()), r + lw);
    for (std::size_t i = 0; i < items.size(); ++i) {
        x(i, canon_idx[items[i]]) = 1.0;
        const Eigen::VectorXd enc = encode_label(data, data.items[partners[i]].label);
        for (int j = 0; j < lw; ++j) x(i, r + j) = enc(j);
    }
    return x;
}

}  // namespace

TaskDepResult detection_metric_m1(const LabeledDataset& data, const Canonicalizer& canon,
                                  const std::vector<int>& hidden, const TrainConfig& config,
                                  std::uint64_t seed) {
    if (data.empty()) throw DatasetError("task-dependent metric needs data");
    const int r = canon.group.element_count();
    const int n = data.size();
    std::vector<int> canon_idx(n);
    for (int i = 0; i < n; ++i) canon_idx[i] = canonicalize(canon, data.items[i]);

    const SplitIndices split = split_60_20_20(n, derive_seed(seed, 31));

    auto build_pairs = [&](const std::vector<int>& idx, Rng& rng, Eigen::MatrixXd& x,
                           Eigen::VectorXd& y) {
        // matched pairs label 0; mismatched pairs label 1 with partners drawn
        // without replacement (a fresh permutation of the split)
        std::vector<int> partners = idx;
        rng.shuffle(partners);
        std::vector<int> items2(idx.begin(), idx.end());
        Eigen::MatrixXd matched = pair_features(data, canon_idx, r, items2, items2);
        Eigen::MatrixXd mismatched = pair_features(data, canon_idx, r, items2, partners);
        x.resize(matched.rows() + mismatched.rows(), matched.cols());
        x << matched, mismatched;
        y.resize(x.rows());
        y.head(matched.rows()).setZero();
        y.tail(mismatched.rows()).setOnes();
    };

    Rng fixed_rng(derive_seed(seed, 32));
    Eigen::MatrixXd x_val, x_test;
    Eigen::VectorXd y_val, y_test;
    build_pairs(split.val, fixed_rng, x_val, y_val);
    build_pairs(split.test, fixed_rng, x_test, y_test);

    MLPSpec spec;
    spec.inputs = r + label_width(data);
    spec.hidden = hidden;
    spec.outputs = 1;
    spec.head = Head::BinaryLogit;

    TrainConfig cfg = config;
    cfg.seed = derive_seed(seed, 33);
    auto provider = [&](int, Rng& rng, Eigen::MatrixXd& x, Eigen::VectorXd& y) {
        build_pairs(split.train, rng, x, y);
    };
    TrainResult trained = train_with_provider(spec, provider, x_val, y_val, cfg);

    TaskDepResult result;
    result.curve = trained.curve;
    result.m1 = trained.model.accuracy(x_test.transpose(), y_test);
    return result;
}

TaskDepResult direct_metric_m2(const LabeledDataset& data, const Canonicalizer& canon,
                               const std::vector<int>& hidden, const TrainConfig& config,
                               std::uint64_t seed) {
    if (data.empty()) throw DatasetError("task-dependent metric needs data");
    if (data.label_space == LabelSpace::Real)
        throw ConfigError("direct metric uses 0/1 loss; labels must be discrete");
    const int r = canon.group.element_count();
    const int n = data.size();
    std::vector<int> canon_idx(n);
    for (int i = 0; i < n; ++i) canon_idx[i] = canonicalize(canon, data.items[i]);

    const SplitIndices split = split_60_20_20(n, derive_seed(seed, 41));
    const int k = data.label_space == LabelSpace::Binary ? 2 : data.n_classes;

    auto features_of = [&](const std::vector<int>& idx) {
        Eigen::MatrixXd x = Eigen::MatrixXd::Zero(static_cast<int>(idx.size()), r);
        for (std::size_t i = 0; i < idx.size(); ++i) x(i, canon_idx[idx[i]]) = 1.0;
        return x;
    };
    auto labels_of = [&](const std::vector<int>& idx) {
        Eigen::VectorXd y(static_cast<int>(idx.size()));
        for (std::size_t i = 0; i < idx.size(); ++i) y(i) = data.items[idx[i]].label;
        return y;
    };

    MLPSpec spec;
    spec.inputs = r;
    spec.hidden = hidden;
    spec.outputs = k;
    spec.head = Head::Softmax;

    TrainConfig cfg = config;
    cfg.seed = derive_seed(seed, 42);
    cfg.standardize = false;  // one-hot inputs
    auto provider = [&](int, Rng&, Eigen::MatrixXd& x, Eigen::VectorXd& y) {
        x = features_of(split.train);
        y = labels_of(split.train);
    };
    TrainResult trained =
        train_with_provider(spec, provider, features_of(split.val), labels_of(split.val), cfg);

    // held-out matched and independently re-paired labels
    Rng pair_rng(derive_seed(seed, 43));
    std::vector<int> partners = split.test;
    pair_rng.shuffle(partners);

    const Eigen::MatrixXd x_test = features_of(split.test).transpose();
    double matched01 = 0.0, mismatched01 = 0.0;
    double matched_ce = 0.0, mismatched_ce = 0.0;
    const int nt = static_cast<int>(split.test.size());
    for (int i = 0; i < nt; ++i) {
        const Eigen::VectorXd logits = trained.model.predict(x_test.col(i));
        int arg = 0;
        logits.maxCoeff(&arg);
        const double zmax = logits.maxCoeff();
        double lse = 0.0;
        for (int j = 0; j < k; ++j) lse += std::exp(logits(j) - zmax);
        lse = zmax + std::log(lse);
        const int truth = static_cast<int>(data.items[split.test[i]].label);
        const int other = static_cast<int>(data.items[partners[i]].label);
        matched01 += arg == truth ? 0.0 : 1.0;
        mismatched01 += arg == other ? 0.0 : 1.0;
        matched_ce += lse - logits(truth);
        mismatched_ce += lse - logits(other);
    }
    TaskDepResult result;
    result.curve = trained.curve;
    result.m2 = (mismatched01 - matched01) / nt;
    result.m2_xent = (mismatched_ce - matched_ce) / nt;
    return result;
}

AffineRelation affine_relation_check(const Eigen::MatrixXd& joint) {
    const int ng = static_cast<int>(joint.rows());
    const int ny = static_cast<int>(joint.cols());
    if (ng < 1 || ny < 1 || static_cast<long>(ng) * ny > 10000)
        throw ConfigError("joint must be a nonempty table with at most 10^4 cells");
    double total = 0.0;
    for (int g = 0; g < ng; ++g)
        for (int y = 0; y < ny; ++y) {
            if (joint(g, y) < -1e-15) throw ConfigError("joint probabilities must be >= 0");
            total += joint(g, y);
        }
    if (std::abs(total - 1.0) > 1e-9) throw ConfigError("joint probabilities must sum to 1");

    const Eigen::VectorXd pg = joint.rowwise().sum();
    const Eigen::VectorXd py = joint.colwise().sum();

    AffineRelation rel;
    // optimum over prediction maps: per orientation pick the label with the
    // largest joint-minus-product advantage
    double m2 = 0.0;
    double matched = 0.0, mismatched = 0.0;
    for (int g = 0; g < ng; ++g) {
        int best = 0;
        double best_adv = -std::numeric_limits<double>::infinity();
        for (int y = 0; y < ny; ++y) {
            const double adv = joint(g, y) - pg(g) * py(y);
            if (adv > best_adv) {
                best_adv = adv;
                best = y;
            }
        }
        m2 += best_adv;
        matched += joint(g, best);
        mismatched += pg(g) * py(best);
    }
    rel.m2_star = m2;
    // the induced pair classifier from the same prediction map: accuracy
    // (1 + matched - mismatched)/2, maximized by the same per-row argmax
    rel.m1_star = 0.5 + 0.5 * (matched - mismatched);

    double tv = 0.0;
    for (int g = 0; g < ng; ++g)
        for (int y = 0; y < ny; ++y) tv += std::max(0.0, joint(g, y) - pg(g) * py(y));
    rel.m1_two_sample = 0.5 + 0.5 * tv;

    if (std::abs(rel.m2_star - (2.0 * rel.m1_star - 1.0)) > 1e-12)
        throw NumericError("affine relation m2* = 2 m1* - 1 violated beyond 1e-12");
    return rel;
}

}  // namespace symbreak
