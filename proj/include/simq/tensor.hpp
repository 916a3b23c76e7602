#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "simq/errors.hpp"

namespace simq {

// Dense row-major tensor of 64-bit floats. Rank 1 (vectors) and rank 2
// (matrices) cover everything the encoders need; scalars are shape {1}.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> values;

    Tensor() = default;
    Tensor(std::vector<std::size_t> s, std::vector<double> v)
        : shape(std::move(s)), values(std::move(v)) {
        if (values.size() != shape_product(shape))
            throw ShapeError("tensor value count does not match shape");
    }

    static std::size_t shape_product(const std::vector<std::size_t>& s) {
        std::size_t p = 1;
        for (std::size_t d : s) p *= d;
        return p;
    }

    static Tensor zeros(std::vector<std::size_t> s) {
        std::size_t n = shape_product(s);
        return Tensor(std::move(s), std::vector<double>(n, 0.0));
    }

    static Tensor full(std::vector<std::size_t> s, double v) {
        std::size_t n = shape_product(s);
        return Tensor(std::move(s), std::vector<double>(n, v));
    }

    static Tensor scalar(double v) { return Tensor({1}, {v}); }

    static Tensor row(std::vector<double> v) {
        std::size_t n = v.size();
        return Tensor({n}, std::move(v));
    }

    std::size_t size() const { return values.size(); }
    std::size_t rank() const { return shape.size(); }
    bool is_scalar() const { return values.size() == 1; }

    double& operator[](std::size_t i) { return values[i]; }
    double operator[](std::size_t i) const { return values[i]; }

    // Matrix element access for rank-2 tensors.
    double& at(std::size_t r, std::size_t c) { return values[r * shape[1] + c]; }
    double at(std::size_t r, std::size_t c) const { return values[r * shape[1] + c]; }

    std::span<const double> view() const { return values; }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }
};

inline bool all_finite(std::span<const double> v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

}  // namespace simq
