#include "simq/metrics.hpp"

#include <cmath>
#include <cstdio>

#include <boost/math/distributions/students_t.hpp>

#include "simq/rng.hpp"

namespace simq {

double average_precision(std::span<const std::uint8_t> labels) {
    std::size_t hits = 0;
    double sum = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i]) {
            ++hits;
            sum += static_cast<double>(hits) / static_cast<double>(i + 1);
        }
    }
    if (hits == 0) throw DataError("average precision undefined: no positive labels");
    return sum / static_cast<double>(hits);
}

double mean_average_precision(std::span<const QueryLabels> results) {
    if (results.empty()) throw DataError("empty result set");
    double sum = 0.0;
    for (const auto& r : results) sum += average_precision(r.labels);
    return sum / static_cast<double>(results.size()) * 100.0;
}

double mean_reciprocal_rank(std::span<const QueryLabels> results) {
    if (results.empty()) throw DataError("empty result set");
    double sum = 0.0;
    for (const auto& r : results) {
        double rr = 0.0;
        for (std::size_t i = 0; i < r.labels.size(); ++i) {
            if (r.labels[i]) {
                rr = 1.0 / static_cast<double>(i + 1);
                break;
            }
        }
        sum += rr;
    }
    return sum / static_cast<double>(results.size()) * 100.0;
}

double precision_at(std::span<const QueryLabels> results, std::size_t n) {
    if (results.empty()) throw DataError("empty result set");
    if (n == 0) throw DataError("precision_at requires n >= 1");
    double sum = 0.0;
    for (const auto& r : results) {
        std::size_t hits = 0;
        const std::size_t top = std::min(n, r.labels.size());
        for (std::size_t i = 0; i < top; ++i) hits += r.labels[i];
        sum += static_cast<double>(hits) / static_cast<double>(n);
    }
    return sum / static_cast<double>(results.size()) * 100.0;
}

MetricsRow compute_metrics(std::span<const QueryLabels> results) {
    MetricsRow row;
    row.map = mean_average_precision(results);
    row.mrr = mean_reciprocal_rank(results);
    row.p1 = precision_at(results, 1);
    row.p5 = precision_at(results, 5);
    return row;
}

std::string MetricsRow::formatted() const {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.1f %.1f %.1f %.1f", map, mrr, p1, p5);
    return buf;
}

namespace {

double mean_abs(const std::vector<double>& d) {
    double s = 0.0;
    for (double x : d) s += x;
    return std::fabs(s / static_cast<double>(d.size()));
}

double permutation_p(const std::vector<double>& diffs, std::size_t resamples,
                     std::uint64_t seed) {
    const std::size_t n = diffs.size();
    const double observed = mean_abs(diffs);
    // Ties at the observed statistic count as at-least-as-extreme.
    const double cutoff = observed - 1e-12;

    if (n < 63 && (1ULL << n) <= resamples) {
        const std::uint64_t total = 1ULL << n;
        std::size_t extreme = 0;
        for (std::uint64_t mask = 0; mask < total; ++mask) {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                s += (mask >> i) & 1 ? -diffs[i] : diffs[i];
            if (std::fabs(s / static_cast<double>(n)) >= cutoff) ++extreme;
        }
        return static_cast<double>(extreme) / static_cast<double>(total);
    }

    Rng rng(seed);
    std::size_t extreme = 0;
    for (std::size_t r = 0; r < resamples; ++r) {
        double s = 0.0;
        for (double d : diffs) s += rng.next_u64() & 1 ? -d : d;
        if (std::fabs(s / static_cast<double>(n)) >= cutoff) ++extreme;
    }
    return static_cast<double>(extreme + 1) / static_cast<double>(resamples + 1);
}

double ttest_p(const std::vector<double>& diffs) {
    const std::size_t n = diffs.size();
    if (n < 2) throw DataError("paired t-test needs at least 2 queries");
    double mean = 0.0;
    for (double d : diffs) mean += d;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double d : diffs) var += (d - mean) * (d - mean);
    var /= static_cast<double>(n - 1);
    if (var == 0.0) return mean == 0.0 ? 1.0 : 0.0;
    const double t = mean / std::sqrt(var / static_cast<double>(n));
    boost::math::students_t dist(static_cast<double>(n - 1));
    return 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(t)));
}

}  // namespace

double significance_test(std::span<const double> a, std::span<const double> b,
                         std::size_t resamples, SigTest kind, std::uint64_t seed) {
    if (a.size() != b.size() || a.empty())
        throw DataError("significance test requires paired, non-empty score lists");
    if (kind == SigTest::Permutation && resamples < 1000)
        throw DataError("permutation test requires >= 1000 resamples");
    std::vector<double> diffs(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) diffs[i] = a[i] - b[i];
    return kind == SigTest::Permutation ? permutation_p(diffs, resamples, seed)
                                        : ttest_p(diffs);
}

}  // namespace simq
