#pragma once

#include <cstdint>
#include <vector>

#include "json.hpp"

#include "baton/sampling.hpp"

namespace baton {

struct TestSuiteConfig {
  /// Names or JSON descriptions accepted by make_test_target.
  nlohmann::json targets = nlohmann::json::array({"normal", "funnel", "multi_cauchy"});
  std::vector<std::size_t> dims{2};
  SamplerConfig sampler;
  std::uint64_t seed = 42;
  /// Size of the exact reference sample for the KS tests.
  std::size_t reference_samples = 100000;
  double ks_threshold = 0.005;
  double location_tolerance = 0.05;
  double variance_tolerance = 0.10;
  /// Multi-Cauchy gates: the mode is compared with the nearest mirror image.
  double cauchy_mode_tolerance = 0.25;
  double cauchy_mean_tolerance = 1.5;
  /// Harmonic-mean evidence is skipped above this dimension.
  std::size_t evidence_max_dims = 20;
};

TestSuiteConfig testsuite_config_from_json(const nlohmann::json& j, TestSuiteConfig base = {});
nlohmann::json to_json(const TestSuiteConfig& cfg);

/// Samples every (target, dims) case, compares modes, means, variances and
/// marginal distributions with the analytic values, and estimates the
/// evidence. Case (t, d) uses stream seed/t/d. Failures are recorded per
/// case; the suite continues.
nlohmann::json run_testsuite(const TestSuiteConfig& cfg);

}  // namespace baton
