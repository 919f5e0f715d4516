#pragma once

#include <Eigen/Core>

#include "baton/chain.hpp"
#include "baton/density.hpp"
#include "baton/rng.hpp"
#include "baton/sample_batch.hpp"

namespace baton {

struct MhTunerConfig {
  double alpha_min = 0.15;
  double alpha_max = 0.35;
  double c_min = 1e-4;
  double c_max = 100.0;
  /// Multiplicative scale step per cycle.
  double beta = 1.5;
  /// Student's t degrees of freedom of the proposal.
  double nu = 1.0;

  void validate() const;
};

/// Proposal shape (covariance and its Cholesky factor), scale and the
/// acceptance tally of the current cycle. Proposals are t(nu, x, c^2 Sigma).
struct TunerState {
  MhTunerConfig config;
  Eigen::MatrixXd covariance;
  Eigen::MatrixXd cholesky;
  double scale = 1.0;
  std::uint64_t accepted = 0;
  std::uint64_t proposed = 0;
  bool tuned = false;

  /// Sigma = diag(marginal variances) when known, identity otherwise;
  /// c = 2.38 / sqrt(d) clamped to [c_min, c_max].
  static TunerState initial(const Density& target, MhTunerConfig config = {});

  double acceptance_rate() const noexcept;
  void set_covariance(const Eigen::MatrixXd& sigma);
};

/// min(1, exp(log_target_ratio + log_proposal_ratio)); log_proposal_ratio is
/// log g(x|x') - log g(x'|x), zero for symmetric proposals.
double mh_accept_probability(double log_target_ratio, double log_proposal_ratio = 0.0) noexcept;

/// Accepts iff u < acceptance probability, with u in [0, 1).
bool mh_accept(double log_target_ratio, double u, double log_proposal_ratio = 0.0) noexcept;

/// One Metropolis-Hastings transition with a multivariate Student's t
/// proposal. Draws come from `rng`, which should be the step's own stream.
/// Returns whether the proposal was accepted; a finished repetition group is
/// written to `out` when non-null.
bool mh_step(ChainState& state, const Density& target, TunerState& tuner, RngNode& rng,
             SampleBatch* out);

/// Re-estimates Sigma from the cycle's samples and moves c toward the
/// acceptance band, then clears the tally. Sigma is kept when nothing was
/// accepted in the cycle. Throws NumericalError if the covariance stays
/// indefinite after regularization.
void adapt_proposal(TunerState& tuner, const SampleBatch& cycle_samples);

/// Frequency-weighted covariance (divisor W - 1).
Eigen::MatrixXd weighted_covariance(const SampleBatch& batch);
Eigen::VectorXd weighted_mean(const SampleBatch& batch);

}  // namespace baton
