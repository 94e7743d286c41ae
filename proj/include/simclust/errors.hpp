#pragma once

#include <stdexcept>
#include <string>

namespace simclust {

/// Malformed or inconsistent input: bad files, bad tokens, mismatched ids,
/// violated preconditions on user-supplied data.
class data_error : public std::runtime_error {
public:
    explicit data_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Numerical failure: solver non-convergence, non-finite values, domain
/// violations in special-function arguments.
class numeric_error : public std::runtime_error {
public:
    explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace simclust
