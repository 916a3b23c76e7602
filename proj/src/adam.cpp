#include "simq/adam.hpp"

#include <cmath>

namespace simq {

AdamState AdamState::create(const ParamStore& params, double lr) {
    AdamState s;
    s.lr = lr;
    s.m.reserve(params.count());
    s.v.reserve(params.count());
    for (std::size_t i = 0; i < params.count(); ++i) {
        s.m.push_back(Tensor::zeros(params.value(static_cast<int>(i)).shape));
        s.v.push_back(Tensor::zeros(params.value(static_cast<int>(i)).shape));
    }
    return s;
}

void adam_step(ParamStore& params, AdamState& state) {
    if (state.m.size() != params.count())
        throw ShapeError("Adam state does not match parameter store");
    state.step += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (std::size_t p = 0; p < params.count(); ++p) {
        Tensor& value = params.value(static_cast<int>(p));
        const Tensor& grad = params.grad(static_cast<int>(p));
        if (!value.same_shape(grad)) throw ShapeError("gradient shape mismatch in Adam");
        Tensor& m = state.m[p];
        Tensor& v = state.v[p];
        for (std::size_t i = 0; i < value.size(); ++i) {
            const double g = grad.values[i];
            m.values[i] = state.beta1 * m.values[i] + (1.0 - state.beta1) * g;
            v.values[i] = state.beta2 * v.values[i] + (1.0 - state.beta2) * g * g;
            const double mhat = m.values[i] / bc1;
            const double vhat = v.values[i] / bc2;
            value.values[i] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
        }
        if (!all_finite(value.values)) throw NumericError("non-finite parameter after Adam step");
    }
}

}  // namespace simq
