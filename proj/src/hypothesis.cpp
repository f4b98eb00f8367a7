#include "symbreak/hypothesis.hpp"

#include <algorithm>
#include <cmath>

#include "symbreak/parallel.hpp"
#include "symbreak/stats.hpp"

namespace symbreak {

void PValueConfig::validate() const {
    if (n1 < 1 || n2 < 1) throw ConfigError("p-value needs n1 >= 1 and n2 >= 1");
    if (subsample < 0) throw ConfigError("subsample size must be >= 0");
    if (augmented_fraction < 0.0 || augmented_fraction > 1.0)
        throw ConfigError("augmented fraction must lie in [0, 1]");
}

namespace {

LabeledDataset subsample_without_replacement(const LabeledDataset& data, int size, Rng& rng) {
    LabeledDataset out = data;
    out.items.clear();
    auto order = rng.permutation(data.size());
    for (int i = 0; i < size; ++i) out.items.push_back(data.items[order[i]]);
    return out;
}

void transform_fraction(LabeledDataset& data, const GroupAction& group, double fraction,
                        Rng& rng) {
    const int n = data.size();
    const int k = static_cast<int>(std::lround(fraction * n));
    auto order = rng.permutation(n);
    for (int i = 0; i < k; ++i) {
        DataItem& item = data.items[order[i]];
        item.x = group.apply_cloud(group.sample(rng), item.x);
    }
}

double round_distance(const LabeledDataset& train, const LabeledDataset& test,
                      const GroupAction& group, const PValueConfig& config,
                      double fraction, std::uint64_t round_seed) {
    Rng rng(round_seed);
    const int sub_train =
        config.subsample > 0 ? std::min(config.subsample, train.size()) : train.size();
    const int sub_test =
        config.subsample > 0 ? std::min(config.subsample, test.size()) : test.size();
    LabeledDataset a = subsample_without_replacement(train, sub_train, rng);
    LabeledDataset b = subsample_without_replacement(test, sub_test, rng);
    transform_fraction(a, group, fraction, rng);
    transform_fraction(b, group, 1.0, rng);  // reference side: fully symmetrized
    if (config.distance == DistanceKind::Mmd) {
        KernelSpec kernel = config.kernel;
        if (kernel.sigma <= 0.0) {
            std::vector<DataItem> pool(a.items.begin(), a.items.end());
            pool.insert(pool.end(), b.items.begin(), b.items.end());
            Rng sigma_rng(derive_seed(round_seed, 7));
            kernel.sigma = median_heuristic_sigma(pool, kernel.kind, sigma_rng);
        }
        return mmd(a.items, b.items, kernel).value;
    }
    return classifier_distance(a, b, config.classifier_hidden, config.classifier_config,
                               derive_seed(round_seed, 8));
}

std::vector<double> run_rounds(const LabeledDataset& train, const LabeledDataset& test,
                               const GroupAction& group, const PValueConfig& config,
                               double fraction, std::uint64_t seed, std::uint64_t stream,
                               int rounds, int workers) {
    std::vector<double> out(rounds);
    parallel_for(rounds, workers, [&](int i) {
        out[i] = round_distance(train, test, group, config, fraction,
                                derive_seed(seed, stream * 1000003ULL + i));
    });
    for (int i = 0; i < rounds; ++i)
        if (!std::isfinite(out[i]))
            throw NumericError("distance in round " + std::to_string(i) + " is not finite");
    return out;
}

double pvalue_from_distances(const std::vector<double>& calibration, double mean_actual) {
    int count = 0;
    for (double d : calibration)
        if (d > mean_actual) ++count;
    return (1.0 + count) / (1.0 + static_cast<double>(calibration.size()));
}

}  // namespace

PValueResult compute_pvalue(const LabeledDataset& train, const LabeledDataset& test,
                            const GroupAction& group, const PValueConfig& config,
                            std::uint64_t seed, int workers) {
    config.validate();
    if (train.empty() || test.empty()) throw DatasetError("p-value needs nonempty data");
    PValueResult result;
    result.calibration = run_rounds(train, test, group, config, 1.0, seed, 1,
                                    config.n1, workers);
    result.actual = run_rounds(train, test, group, config, config.augmented_fraction,
                               seed, 2, config.n2, workers);
    result.mean_actual = mean(result.actual);
    result.p = pvalue_from_distances(result.calibration, result.mean_actual);
    return result;
}

SweepResult distance_sweep(const LabeledDataset& train, const LabeledDataset& test,
                           const GroupAction& group, const PValueConfig& config,
                           const std::vector<double>& fractions, std::uint64_t seed,
                           int workers) {
    config.validate();
    for (double f : fractions)
        if (f < 0.0 || f > 1.0) throw ConfigError("sweep fractions must lie in [0, 1]");
    const std::vector<double> calibration =
        run_rounds(train, test, group, config, 1.0, seed, 1, config.n1, workers);

    SweepResult result;
    std::vector<double> fr, md;
    for (std::size_t fi = 0; fi < fractions.size(); ++fi) {
        const std::vector<double> actual =
            run_rounds(train, test, group, config, fractions[fi], seed,
                       3 + fi, config.n2, workers);
        SweepRow row;
        row.fraction = fractions[fi];
        row.mean_distance = mean(actual);
        row.p = pvalue_from_distances(calibration, row.mean_distance);
        result.rows.push_back(row);
        fr.push_back(row.fraction);
        md.push_back(row.mean_distance);
    }
    result.spearman_fraction_vs_distance = spearman(fr, md);
    return result;
}

}  // namespace symbreak
