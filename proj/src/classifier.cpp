#include "symbreak/classifier.hpp"

#include <algorithm>

namespace symbreak {

MetricResult task_independent_metric(const LabeledDataset& raw_train,
                                     const LabeledDataset& raw_test,
                                     const GroupAction& group,
                                     const std::vector<int>& hidden,
                                     const TrainConfig& config, std::uint64_t seed) {
    DetectionDataset det = build_detection_dataset(raw_train, raw_test, group, seed);

    MLPSpec spec;
    spec.inputs = std::max(feature_width(det.train), feature_width(det.test));
    spec.hidden = hidden;
    spec.outputs = 1;
    spec.head = Head::BinaryLogit;

    TrainConfig cfg = config;
    cfg.seed = derive_seed(seed, 2);
    TrainResult trained = train(spec, featurize_at_width(det.train, spec.inputs),
                                labels_vector(det.train), cfg);

    MetricResult result;
    result.curve = trained.curve;
    result.n_train = det.train.size();
    result.n_test = det.test.size();

    const Eigen::MatrixXd x_test = featurize_at_width(det.test, spec.inputs).transpose();
    const Eigen::VectorXd y_test = labels_vector(det.test);
    long correct = 0;
    for (int i = 0; i < x_test.cols(); ++i) {
        const double pred = trained.model.predict_value(x_test.col(i));
        const bool truth = y_test(i) > 0.5;
        if (pred > 0.5) {
            (truth ? result.confusion.tp : result.confusion.fp)++;
        } else {
            (truth ? result.confusion.fn : result.confusion.tn)++;
        }
        if ((pred > 0.5) == truth) ++correct;
    }
    result.test_accuracy = static_cast<double>(correct) / result.n_test;
    return result;
}

double classifier_distance(const LabeledDataset& a, const LabeledDataset& b,
                           const std::vector<int>& hidden, const TrainConfig& config,
                           std::uint64_t seed) {
    if (a.empty() || b.empty()) throw DatasetError("classifier distance needs nonempty samples");
    LabeledDataset merged = a;
    merged.label_space = LabelSpace::Binary;
    merged.n_classes = 2;
    for (auto& it : merged.items) it.label = 0.0;
    for (const auto& it : b.items) {
        DataItem copy = it;
        copy.label = 1.0;
        merged.items.push_back(std::move(copy));
    }

    Rng rng(derive_seed(seed, 3));
    const auto order = rng.permutation(merged.size());
    LabeledDataset train_half = merged, test_half = merged;
    train_half.items.clear();
    test_half.items.clear();
    const int n_train = merged.size() / 2;
    for (int i = 0; i < merged.size(); ++i)
        (i < n_train ? train_half : test_half).items.push_back(merged.items[order[i]]);

    MLPSpec spec;
    spec.inputs = std::max(feature_width(train_half), feature_width(test_half));
    spec.hidden = hidden;
    spec.outputs = 1;
    spec.head = Head::BinaryLogit;

    TrainConfig cfg = config;
    cfg.seed = derive_seed(seed, 4);
    TrainResult trained = train(spec, featurize_at_width(train_half, spec.inputs),
                                labels_vector(train_half), cfg);
    return trained.model.accuracy(featurize_at_width(test_half, spec.inputs).transpose(),
                                  labels_vector(test_half));
}

double optimal_orbit_accuracy(const OrbitDistribution& dist) {
    dist.validate();
    const double uniform = 1.0 / dist.orbit_size;
    double overlap = 0.0;
    for (int i = 0; i < dist.orbit_size; ++i)
        overlap += std::min(uniform, dist.weights(i));
    return 1.0 - 0.5 * overlap;
}

}  // namespace symbreak
