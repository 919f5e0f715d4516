#include "baton/mh.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Cholesky>

#include "baton/error.hpp"

namespace baton {

void ChainState::advance(bool accepted, std::span<const double> proposal,
                         double proposal_log_target, SampleBatch* out) {
  if (accepted) {
    if (out && weight_pending > 0) {
      out->push_back(position, static_cast<double>(weight_pending), log_target, chain_id,
                     position_step);
    }
    position.assign(proposal.begin(), proposal.end());
    log_target = proposal_log_target;
    weight_pending = 1;
    position_step = step_index;
  } else {
    ++weight_pending;
  }
  ++step_index;
}

void ChainState::flush(SampleBatch& out) {
  if (weight_pending > 0) {
    out.push_back(position, static_cast<double>(weight_pending), log_target, chain_id,
                  position_step);
    weight_pending = 0;
  }
  position_step = step_index;
}

void MhTunerConfig::validate() const {
  if (!(0.0 <= alpha_min && alpha_min < alpha_max && alpha_max <= 1.0)) {
    throw ContractViolation("MH tuner needs 0 <= alpha_min < alpha_max <= 1");
  }
  if (!(0.0 < c_min && c_min <= c_max)) throw ContractViolation("MH tuner needs 0 < c_min <= c_max");
  if (!(beta > 1.0)) throw ContractViolation("MH tuner scale step must exceed 1");
  if (!(nu > 0.0)) throw ContractViolation("Student's t degrees of freedom must be positive");
}

TunerState TunerState::initial(const Density& target, MhTunerConfig config) {
  config.validate();
  const auto d = static_cast<Eigen::Index>(target.dims());
  TunerState t;
  t.config = config;
  Eigen::MatrixXd sigma = Eigen::MatrixXd::Identity(d, d);
  const Density* reference = target.prior() ? target.prior() : &target;
  if (auto var = reference->marginal_variances()) {
    for (Eigen::Index k = 0; k < d; ++k) {
      const double v = (*var)[static_cast<std::size_t>(k)];
      if (std::isfinite(v) && v > 0.0) sigma(k, k) = v;
    }
  }
  t.set_covariance(sigma);
  t.scale = std::clamp(2.38 / std::sqrt(static_cast<double>(d)), config.c_min, config.c_max);
  return t;
}

double TunerState::acceptance_rate() const noexcept {
  return proposed == 0 ? 0.0 : static_cast<double>(accepted) / static_cast<double>(proposed);
}

void TunerState::set_covariance(const Eigen::MatrixXd& sigma) {
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("proposal covariance is not positive definite");
  }
  covariance = sigma;
  cholesky = llt.matrixL();
}

double mh_accept_probability(double log_target_ratio, double log_proposal_ratio) noexcept {
  const double log_p = log_target_ratio + log_proposal_ratio;
  if (std::isnan(log_p)) return 0.0;
  return log_p >= 0.0 ? 1.0 : std::exp(log_p);
}

bool mh_accept(double log_target_ratio, double u, double log_proposal_ratio) noexcept {
  return u < mh_accept_probability(log_target_ratio, log_proposal_ratio);
}

bool mh_step(ChainState& state, const Density& target, TunerState& tuner, RngNode& rng,
             SampleBatch* out) {
  const auto d = static_cast<Eigen::Index>(state.position.size());
  Eigen::VectorXd z(d);
  for (Eigen::Index k = 0; k < d; ++k) z(k) = rng.normal();
  const double nu = tuner.config.nu;
  const double mix = std::sqrt(nu / rng.chi_square(nu));
  const Eigen::VectorXd delta = (tuner.scale * mix) * (tuner.cholesky * z);

  std::vector<double> proposal(state.position);
  for (Eigen::Index k = 0; k < d; ++k) proposal[static_cast<std::size_t>(k)] += delta(k);

  const double log_target = target.log_density(proposal);
  const double u = rng.uniform();
  const bool accepted = log_target != kNegInf && mh_accept(log_target - state.log_target, u);
  ++tuner.proposed;
  if (accepted) ++tuner.accepted;
  state.advance(accepted, proposal, log_target, out);
  return accepted;
}

Eigen::VectorXd weighted_mean(const SampleBatch& batch) {
  const auto d = static_cast<Eigen::Index>(batch.dims());
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
  double total = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const double w = batch.weights()[i];
    total += w;
    for (Eigen::Index k = 0; k < d; ++k) mean(k) += w * batch.value(i, static_cast<std::size_t>(k));
  }
  return mean / total;
}

Eigen::MatrixXd weighted_covariance(const SampleBatch& batch) {
  const auto d = static_cast<Eigen::Index>(batch.dims());
  const Eigen::VectorXd mean = weighted_mean(batch);
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
  Eigen::VectorXd r(d);
  double total = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const double w = batch.weights()[i];
    total += w;
    for (Eigen::Index k = 0; k < d; ++k) r(k) = batch.value(i, static_cast<std::size_t>(k)) - mean(k);
    cov.noalias() += w * r * r.transpose();
  }
  return cov / std::max(total - 1.0, 1.0);
}

void adapt_proposal(TunerState& tuner, const SampleBatch& cycle_samples) {
  if (cycle_samples.empty()) throw ContractViolation("proposal adaptation needs samples");
  const auto& cfg = tuner.config;
  const double alpha = tuner.acceptance_rate();

  if (tuner.accepted > 0) {
    Eigen::MatrixXd sigma = weighted_covariance(cycle_samples);
    Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    if (llt.info() != Eigen::Success) {
      const auto d = sigma.rows();
      sigma += (1e-6 * sigma.trace() / static_cast<double>(d)) *
               Eigen::MatrixXd::Identity(d, d);
    }
    tuner.set_covariance(sigma);
  }

  if (alpha < cfg.alpha_min) {
    tuner.scale = std::max(tuner.scale / cfg.beta, cfg.c_min);
  } else if (alpha > cfg.alpha_max) {
    tuner.scale = std::min(tuner.scale * cfg.beta, cfg.c_max);
  }
  tuner.tuned = alpha >= cfg.alpha_min && alpha <= cfg.alpha_max;
  tuner.accepted = 0;
  tuner.proposed = 0;
}

}  // namespace baton
