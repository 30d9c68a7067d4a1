#pragma once

#include <stdexcept>

namespace mlmcjd {

/// A sample produced a non-finite value or an undefined likelihood weight.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace mlmcjd
