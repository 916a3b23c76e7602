#pragma once

#include <cstdint>
#include <vector>

#include "simq/tape.hpp"

namespace simq {

// Adam with bias-corrected moment estimates, default coefficients
// beta1=0.9, beta2=0.999, eps=1e-8.
struct AdamState {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::int64_t step = 0;
    std::vector<Tensor> m;  // first moments, aligned with the store
    std::vector<Tensor> v;  // second moments

    static AdamState create(const ParamStore& params, double lr);
};

// One update over every parameter in the store using the accumulated
// gradients. Gradients are left untouched; the caller zeroes them.
void adam_step(ParamStore& params, AdamState& state);

}  // namespace simq
