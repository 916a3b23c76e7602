#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace simq {

using ScalarFn = std::function<double(std::span<const double>)>;

struct GradCheckResult {
    double max_rel_error = 0.0;
    std::size_t worst_index = 0;
};

// Compares an analytic gradient against central finite differences of `f`
// at `point`, coordinate by coordinate. The reported error is
// |analytic - (f(x+e) - f(x-e)) / 2e| / max(1, |analytic|), maximized over
// coordinates. Valid epsilon range is [1e-6, 1e-4]; non-finite function
// values at a perturbed point raise NumericError.
GradCheckResult finite_diff_check(const ScalarFn& f,
                                  std::span<const double> point,
                                  std::span<const double> analytic,
                                  double epsilon);

}  // namespace simq
