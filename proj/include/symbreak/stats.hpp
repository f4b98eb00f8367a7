#pragma once

#include <vector>

#include "symbreak/rng.hpp"

namespace symbreak {

double mean(const std::vector<double>& v);

/// Sample standard deviation (n-1 denominator); 0 for fewer than 2 points.
double sample_std(const std::vector<double>& v);

/// Spearman rank correlation. Ties get average ranks.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

/// Fraction of bootstrap resamples whose mean is strictly positive; the
/// bootstrap confidence that E[v] > 0.
double bootstrap_fraction_positive(const std::vector<double>& v, int resamples, Rng& rng);

}  // namespace symbreak
