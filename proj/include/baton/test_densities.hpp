#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "baton/density.hpp"

namespace baton {

/// A built-in test density together with its analytic reference values.
struct TestTarget {
  std::string name;
  DensityModel model;
  std::vector<double> mode;
  std::vector<double> mean;
  /// Absent when undefined (Cauchy tails).
  std::optional<std::vector<double>> variance;
  /// Marginal CDF of dimension k.
  std::function<double(std::size_t k, double x)> marginal_cdf;
  /// The fully resolved parameters, defaults filled in.
  nlohmann::json params;
};

/// Multivariate normal. `cov` is dims x dims, row-major.
DensityModel make_normal(std::vector<double> mean, std::vector<double> cov);
/// Per-dimension 1/2 [Cauchy(x|mu,sigma) + Cauchy(x|-mu,sigma)].
DensityModel make_multi_cauchy(std::size_t dims, double mu, double sigma);
/// N(x1|0,a^2) * prod_{i>=2} N(xi|0,exp(2 b x1)).
DensityModel make_funnel(std::size_t dims, double a, double b);

/// Builds a target from a JSON description such as
/// {"name":"funnel","dims":4,"a":1.0,"b":1.0}. Unknown names throw
/// ContractViolation.
TestTarget make_test_target(const nlohmann::json& description);

DensityModel make_test_density(const std::string& name, std::size_t dims,
                               const nlohmann::json& params = nlohmann::json::object());

}  // namespace baton
