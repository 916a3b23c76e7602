#include "simq/grad_check.hpp"

#include <cmath>
#include <stdexcept>

#include "simq/errors.hpp"

namespace simq {

GradCheckResult finite_diff_check(const ScalarFn& f,
                                  std::span<const double> point,
                                  std::span<const double> analytic,
                                  double epsilon) {
    if (epsilon < 1e-6 || epsilon > 1e-4)
        throw std::invalid_argument("finite_diff_check epsilon out of [1e-6, 1e-4]");
    if (point.size() != analytic.size())
        throw std::invalid_argument("analytic gradient length does not match point");

    std::vector<double> x(point.begin(), point.end());
    GradCheckResult result;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double saved = x[i];
        x[i] = saved + epsilon;
        const double fp = f(x);
        x[i] = saved - epsilon;
        const double fm = f(x);
        x[i] = saved;
        if (!std::isfinite(fp) || !std::isfinite(fm))
            throw NumericError("function non-finite at perturbed point");
        const double fd = (fp - fm) / (2.0 * epsilon);
        const double denom = std::max(1.0, std::fabs(analytic[i]));
        const double err = std::fabs(analytic[i] - fd) / denom;
        if (err > result.max_rel_error) {
            result.max_rel_error = err;
            result.worst_index = i;
        }
    }
    return result;
}

}  // namespace simq
