#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "baton/kernels.hpp"
#include "baton/sample_batch.hpp"

namespace baton {

// ---------------------------------------------------------------------------
// Convergence

struct ConvergenceReport {
  std::vector<double> psrf;
  double mpsrf = 0.0;
  bool converged = false;
  double threshold = 1.1;
};

/// One matrix per chain, rows are samples. Integer weights are expanded into
/// repeated rows; fractional weights throw ContractViolation.
std::vector<Eigen::MatrixXd> split_chains(const SampleBatch& batch);

/// Gelman-Rubin R-hat = V/W for coordinate k, with m chains truncated to a
/// common length n:
///   W = sum_i sum_j (x_ij - mean_i)^2 / (m (n - 1))
///   V = (n - 1) W / n + sum_i (mean_i - mean)^2 / (m - 1)
/// Throws NumericalError when W = 0.
double psrf(const std::vector<Eigen::MatrixXd>& chains, std::size_t k);

/// Brooks-Gelman multivariate R-hat: (n - 1)/n + (m + 1)/m * Lambda_1, with
/// Lambda_1 the largest eigenvalue of W*^-1 B*/n. Throws NumericalError
/// naming the offending coordinates when W* is singular.
double mpsrf(const std::vector<Eigen::MatrixXd>& chains);

ConvergenceReport check_convergence(const std::vector<Eigen::MatrixXd>& chains,
                                    double threshold = 1.1);
ConvergenceReport check_convergence(const SampleBatch& batch, double threshold = 1.1);

// ---------------------------------------------------------------------------
// Autocorrelation and effective sample size

enum class IatMethod { geyer, sokal };

/// c(lag) = sum_{i < n - lag} (x_i - mean)(x_{i+lag} - mean) / (n - lag).
/// Throws ContractViolation when lag >= n.
double autocovariance(std::span<const double> x, std::size_t lag);

/// tau = 1 + 2 sum rho(lag), truncated by Geyer's initial monotone sequence
/// or Sokal's adaptive window (c = 5). Chains are pooled around a common
/// mean; the result is floored at 1.
double integrated_autocorr_time(const std::vector<std::vector<double>>& chains,
                                IatMethod method = IatMethod::geyer, kernels::Exec exec = {});
double integrated_autocorr_time(std::span<const double> x, IatMethod method = IatMethod::geyer);

/// ESS_k = N / tau_k per coordinate, N the total weight, chains pooled.
std::vector<double> ess(const SampleBatch& batch, IatMethod method = IatMethod::geyer,
                        kernels::Exec exec = {});

// ---------------------------------------------------------------------------
// Kolmogorov-Smirnov

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
  double n_eff = 0.0;
};

/// Survival function of the Kolmogorov distribution, P(K > lambda).
double kolmogorov_survival(double lambda);

/// Two-sample KS test with p from the asymptotic Kolmogorov distribution,
/// lambda = (sqrt(ne) + 0.12 + 0.11/sqrt(ne)) D and ne = na nb / (na + nb).
/// The sample sizes entering ne are the supplied effective counts.
KsResult ks_two_sample(std::span<const double> a, std::span<const double> b, double n_eff_a,
                       double n_eff_b);
/// Weighted empirical CDFs (weights act as repetition counts).
KsResult ks_two_sample(std::span<const double> a, std::span<const double> wa,
                       std::span<const double> b, std::span<const double> wb, double n_eff_a,
                       double n_eff_b);

// ---------------------------------------------------------------------------
// Binning, point estimates, modes

enum class BinningRule { sqrt, sturges, rice, scott, freedman_diaconis };

BinningRule parse_binning_rule(const std::string& name);
const char* to_string(BinningRule rule) noexcept;

/// Number of bins for n >= 2 points. Scott and Freedman-Diaconis fall back to
/// Sturges when the range or the spread is zero. Capped at 10^6.
std::size_t bin_count(std::span<const double> data, BinningRule rule);
/// Weighted variant; n is the total weight.
std::size_t bin_count(std::span<const double> data, std::span<const double> weights,
                      BinningRule rule);

/// Smallest value whose cumulative weight reaches q * W.
double weighted_quantile(std::span<const double> values, std::span<const double> weights,
                         double q);

struct PointEstimates {
  double mean = 0.0;
  double median = 0.0;
  double std = 0.0;
  std::vector<double> levels;
  std::vector<double> quantiles;
};

PointEstimates point_estimates(const SampleBatch& batch, std::size_t k,
                               std::vector<double> levels = {0.16, 0.5, 0.84});

struct Histogram1D {
  double lower = 0.0;
  double width = 0.0;
  std::vector<double> weights;
  double center(std::size_t i) const { return lower + (static_cast<double>(i) + 0.5) * width; }
};

/// Weighted histogram over [min, max] with bin_count(rule) bins.
Histogram1D marginal_histogram(const SampleBatch& batch, std::size_t k,
                               BinningRule rule = BinningRule::freedman_diaconis);

/// Centre of the heaviest bin; ties go to the lowest bin index. A constant
/// column returns its value.
double marginal_mode(const SampleBatch& batch, std::size_t k,
                     BinningRule rule = BinningRule::freedman_diaconis);

/// (observed - expected) / sqrt(expected) for every bin whose expectation
/// exceeds `min_expected`.
std::vector<double> pull_histogram(std::span<const double> observed,
                                   std::span<const double> expected, double min_expected = 10.0);

struct PullStats {
  double mean = 0.0;
  double sd = 0.0;
  std::size_t bins = 0;
};

PullStats pull_stats(std::span<const double> pulls);

}  // namespace baton
