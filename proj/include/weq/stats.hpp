#pragma once

#include <span>
#include <vector>

namespace weq {

// Pearson correlation; inputs must have equal length >= 2 and both must vary.
double pearson(std::span<const double> xs, std::span<const double> ys);

// Average ranks (1-based, ties share the mean rank).
std::vector<double> average_ranks(std::span<const double> xs);

double median(std::vector<double> xs);

// One-sided sign-test p-value: P[Binomial(n, 1/2) >= wins].
double sign_test_p(std::size_t wins, std::size_t n);

}  // namespace weq
