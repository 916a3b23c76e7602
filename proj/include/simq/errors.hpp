#pragma once

#include <stdexcept>
#include <string>

namespace simq {

// Invalid or inconsistent configuration (bad key, bad combination, missing
// path). CLI maps this to exit code 1.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input data (corpus, annotations, embeddings,
// checkpoints). CLI maps this to exit code 2.
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Numerical failure: NaN/Inf produced by an operation, divergence, or a
// function that cannot be evaluated. CLI maps this to exit code 3.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Operands do not conform (dimension mismatch, non-scalar where a scalar is
// required). Indicates a programming error rather than bad input.
struct ShapeError : std::logic_error {
    using std::logic_error::logic_error;
};

}  // namespace simq
