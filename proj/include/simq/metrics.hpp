#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "simq/errors.hpp"

namespace simq {

// Relevance labels of one query's candidates, in system rank order.
struct QueryLabels {
    int query_id = 0;
    std::vector<std::uint8_t> labels;
};

// Mean of precision@k over the relevant positions k. The denominator is the
// number of positives inside the ranked pool. Returns a fraction in [0, 1].
double average_precision(std::span<const std::uint8_t> labels);

// Aggregates are on the percent scale [0, 100].
double mean_average_precision(std::span<const QueryLabels> results);
double mean_reciprocal_rank(std::span<const QueryLabels> results);
double precision_at(std::span<const QueryLabels> results, std::size_t n);

struct MetricsRow {
    double map = 0.0;
    double mrr = 0.0;
    double p1 = 0.0;
    double p5 = 0.0;
    std::string formatted() const;  // one decimal, Table-style
};
MetricsRow compute_metrics(std::span<const QueryLabels> results);

enum class SigTest { Permutation, TTest };

// Two-sided paired test on the mean difference of per-query scores. The
// permutation variant flips signs of the paired differences; it enumerates
// all 2^n assignments when that is no more work than `resamples` draws,
// otherwise it Monte-Carlo samples with an add-one estimate. The t-test
// alternative is a standard paired Student's t.
double significance_test(std::span<const double> a, std::span<const double> b,
                         std::size_t resamples, SigTest kind = SigTest::Permutation,
                         std::uint64_t seed = 12345);

}  // namespace simq
