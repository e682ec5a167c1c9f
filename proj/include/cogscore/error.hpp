#pragma once

#include <stdexcept>
#include <string>

namespace cogscore {

/// Bad input data or configuration. The CLI maps this to exit code 2.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A statistic is undefined for the given data (constant series, rank-deficient design, ...).
class StatsError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace cogscore
