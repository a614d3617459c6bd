#pragma once

#include <stdexcept>
#include <string>

namespace legproj {

/// Raised when a computation cannot produce a trustworthy number
/// (non-converged root finder, negative Parseval radicand, ...).
/// Precondition violations use std::invalid_argument instead.
class numerical_error : public std::runtime_error
{
  public:
    explicit numerical_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace legproj
