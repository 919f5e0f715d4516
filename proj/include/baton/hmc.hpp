#pragma once

#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "baton/chain.hpp"
#include "baton/density.hpp"
#include "baton/rng.hpp"

namespace baton {

/// Raised when a leapfrog trajectory hits a non-finite state.
class TrajectoryDivergence : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using ScalarField = std::function<double(std::span<const double>)>;
/// Writes the gradient of log pi at q into out.
using GradientField = std::function<void(std::span<const double> q, std::span<double> out)>;

/// Central differences with per-coordinate step h * max(1, |q_k|).
/// Throws ContractViolation if q +- step leaves the support.
std::vector<double> fd_gradient(const Density& target, std::span<const double> q,
                                double h = 1e-6);
void fd_gradient(const ScalarField& f, std::span<const double> q, double h, std::span<double> out);

/// Dual averaging of log step size (Hoffman & Gelman 2014) with
/// gamma = 0.05, t0 = 10, kappa = 0.75. The shrinkage point is mu = log(eps0)
/// rather than log(10 eps0), so the first update already moves eps in the
/// direction the observed acceptance asks for.
struct DualAverage {
  double mu = 0.0;
  double h_bar = 0.0;
  double log_eps = 0.0;
  double log_eps_bar = 0.0;
  double iteration = 0.0;

  static DualAverage start(double step_size);
};

struct HmcHyper {
  double step_size = 0.1;
  std::size_t n_leapfrog = 10;
  std::vector<double> mass_diag;
  double target_accept = 0.8;
  DualAverage dual_avg;

  static HmcHyper initial(std::size_t dims, double step_size = 0.1, std::size_t n_leapfrog = 10,
                          double target_accept = 0.8);
  void validate() const;
};

/// One dual-averaging update; the iterate becomes the new step size.
HmcHyper adapt_step_size(HmcHyper hyper, double observed_accept);
/// The averaged step size used once adaptation stops.
double final_step_size(const HmcHyper& hyper) noexcept;

struct PhasePoint {
  std::vector<double> q;
  std::vector<double> p;
};

/// L leapfrog steps of size eps for H = -log pi(q) + sum p_k^2 / (2 m_k).
/// `grad` returns the gradient of log pi. Throws TrajectoryDivergence when
/// a position or momentum becomes non-finite.
PhasePoint leapfrog(std::span<const double> q, std::span<const double> p, double eps,
                    std::size_t n_steps, const GradientField& grad,
                    std::span<const double> mass_diag);

double kinetic_energy(std::span<const double> p, std::span<const double> mass_diag) noexcept;

/// min(1, exp(H_start - H_end)); 0 when H_end is not finite.
double hmc_accept_probability(double h_start, double h_end) noexcept;

/// Maps a bounded space onto R^d: identity for unbounded coordinates, log for
/// half-bounded ones and logit for intervals.
class UnconstrainedTransform {
 public:
  explicit UnconstrainedTransform(const ParameterSpace& space);

  void to_constrained(std::span<const double> y, std::span<double> x) const;
  void to_unconstrained(std::span<const double> x, std::span<double> y) const;
  /// log |dx/dy| summed over coordinates.
  double log_jacobian(std::span<const double> y) const;
  /// dx_k/dy_k and d log|J_k| / dy_k.
  void derivatives(std::span<const double> y, std::span<double> dx_dy,
                   std::span<double> dlogj_dy) const;
  bool identity() const noexcept { return identity_; }

 private:
  enum class Kind { free, lower, upper, interval };
  std::vector<Kind> kinds_;
  std::vector<double> lower_, upper_;
  bool identity_ = true;
};

enum class GradientMode { automatic, user_supplied, finite_difference };

/// The target in unconstrained coordinates, with its gradient.
class HmcTarget {
 public:
  /// Throws UnsupportedOperation for non-differentiable targets and when
  /// user gradients are requested but unavailable.
  HmcTarget(DensityModel target, GradientMode mode, double fd_step = 1e-6);

  double log_density(std::span<const double> y) const;
  void gradient(std::span<const double> y, std::span<double> out) const;
  const UnconstrainedTransform& transform() const noexcept { return transform_; }
  const Density& model() const noexcept { return *target_; }
  GradientMode mode() const noexcept { return mode_; }

 private:
  DensityModel target_;
  UnconstrainedTransform transform_;
  GradientMode mode_;
  double fd_step_;
};

/// Chain state in unconstrained coordinates with the cached transformed density.
struct HmcChainState {
  ChainState chain;
  std::vector<double> y;
  double log_density_y = 0.0;

  static HmcChainState start(const HmcTarget& target, std::span<const double> x,
                             std::uint64_t chain_id);
};

struct HmcStepResult {
  bool accepted = false;
  double accept_prob = 0.0;
  bool diverged = false;
};

/// Draws momenta, integrates, and accepts with min(1, exp(-dH)). A divergent
/// trajectory is a rejection.
HmcStepResult hmc_step(HmcChainState& state, const HmcTarget& target, const HmcHyper& hyper,
                       RngNode& rng, SampleBatch* out);

}  // namespace baton
