#pragma once
#include <stdexcept>

namespace stokeslab {

// Invalid user input: config keys, region descriptors, size preconditions.
// The CLI maps this to exit code 2.
struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// A computation that cannot produce a trustworthy result (factorization
// failure, residual blowup, unmet steering target). CLI exit code 3.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace stokeslab
