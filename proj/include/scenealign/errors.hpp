// Error categories that the command-line layer maps onto exit codes:
// DataError (and std::invalid_argument) -> 2, NumericalError -> 3.

#pragma once

#include <stdexcept>
#include <string>

namespace scenealign {

/// Unreadable, malformed, or inconsistent input data.
struct DataError : std::runtime_error {
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

/// Diverged optimization, non-finite intermediate values, and similar.
struct NumericalError : std::runtime_error {
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace scenealign
