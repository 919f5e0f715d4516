#pragma once

#include <functional>
#include <span>
#include <vector>

#include "baton/density.hpp"

namespace baton {

struct NelderMeadOptions {
  /// Stop when the simplex diameter falls below rel_tol * max(1, |x_best|).
  double rel_tol = 1e-8;
  std::size_t max_evaluations = 10000;
};

struct NelderMeadResult {
  std::vector<double> x;
  double value = 0.0;
  std::size_t evaluations = 0;
  bool converged = false;
};

/// Minimizes f from `start`. Infinite values are treated as +inf walls.
NelderMeadResult nelder_mead(const std::function<double(std::span<const double>)>& f,
                             std::span<const double> start, NelderMeadOptions options = {});

/// Maximizes the target's log-density from `start`. Throws ContractViolation
/// when `start` is outside the support.
std::vector<double> refine_mode(const Density& target, std::span<const double> start,
                                NelderMeadOptions options = {});

}  // namespace baton
