#include "baton/hmc.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "baton/error.hpp"

namespace baton {

namespace {

constexpr double kGamma = 0.05;
constexpr double kT0 = 10.0;
constexpr double kKappa = 0.75;

double logistic(double y) noexcept {
  return y >= 0.0 ? 1.0 / (1.0 + std::exp(-y)) : std::exp(y) / (1.0 + std::exp(y));
}

bool all_finite(std::span<const double> v) noexcept {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

void fd_gradient(const ScalarField& f, std::span<const double> q, double h,
                 std::span<double> out) {
  std::vector<double> x(q.begin(), q.end());
  for (std::size_t k = 0; k < q.size(); ++k) {
    const double step = h * std::max(1.0, std::abs(q[k]));
    x[k] = q[k] + step;
    const double fp = f(x);
    x[k] = q[k] - step;
    const double fm = f(x);
    x[k] = q[k];
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      throw ContractViolation("finite-difference stencil leaves the support in dimension " +
                              std::to_string(k));
    }
    out[k] = (fp - fm) / (2.0 * step);
  }
}

std::vector<double> fd_gradient(const Density& target, std::span<const double> q, double h) {
  if (q.size() != target.dims()) throw ContractViolation("gradient point has the wrong dimension");
  const auto& space = target.space();
  for (std::size_t k = 0; k < q.size(); ++k) {
    const double step = h * std::max(1.0, std::abs(q[k]));
    if (!(q[k] - step > space.lower[k] && q[k] + step < space.upper[k])) {
      throw ContractViolation("finite-difference point is within one step of the boundary in "
                              "dimension " + std::to_string(k));
    }
  }
  std::vector<double> out(q.size());
  fd_gradient([&](std::span<const double> x) { return target.log_density(x); }, q, h, out);
  return out;
}

DualAverage DualAverage::start(double step_size) {
  DualAverage da;
  da.mu = std::log(step_size);
  da.log_eps = std::log(step_size);
  da.log_eps_bar = 0.0;
  return da;
}

HmcHyper HmcHyper::initial(std::size_t dims, double step_size, std::size_t n_leapfrog,
                           double target_accept) {
  HmcHyper h;
  h.step_size = step_size;
  h.n_leapfrog = n_leapfrog;
  h.mass_diag.assign(dims, 1.0);
  h.target_accept = target_accept;
  h.dual_avg = DualAverage::start(step_size);
  h.validate();
  return h;
}

void HmcHyper::validate() const {
  if (!(step_size > 0.0) || !std::isfinite(step_size)) throw ContractViolation("HMC step size must be positive");
  if (n_leapfrog < 1) throw ContractViolation("HMC needs at least one leapfrog step");
  if (!(target_accept > 0.0 && target_accept < 1.0)) {
    throw ContractViolation("HMC target acceptance must lie in (0, 1)");
  }
  for (double m : mass_diag) {
    if (!(m > 0.0) || !std::isfinite(m)) throw ContractViolation("HMC masses must be positive");
  }
}

HmcHyper adapt_step_size(HmcHyper hyper, double observed_accept) {
  auto& da = hyper.dual_avg;
  const double accept = std::clamp(std::isnan(observed_accept) ? 0.0 : observed_accept, 0.0, 1.0);
  da.iteration += 1.0;
  const double m = da.iteration;
  const double w = 1.0 / (m + kT0);
  da.h_bar = (1.0 - w) * da.h_bar + w * (hyper.target_accept - accept);
  da.log_eps = da.mu - std::sqrt(m) / kGamma * da.h_bar;
  const double eta = std::pow(m, -kKappa);
  da.log_eps_bar = eta * da.log_eps + (1.0 - eta) * da.log_eps_bar;
  hyper.step_size = std::exp(da.log_eps);
  return hyper;
}

double final_step_size(const HmcHyper& hyper) noexcept {
  return hyper.dual_avg.iteration > 0.0 ? std::exp(hyper.dual_avg.log_eps_bar) : hyper.step_size;
}

double kinetic_energy(std::span<const double> p, std::span<const double> mass_diag) noexcept {
  double k = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) k += p[i] * p[i] / (2.0 * mass_diag[i]);
  return k;
}

double hmc_accept_probability(double h_start, double h_end) noexcept {
  const double dh = h_start - h_end;
  if (std::isnan(dh) || !std::isfinite(h_end)) return 0.0;
  return dh >= 0.0 ? 1.0 : std::exp(dh);
}

PhasePoint leapfrog(std::span<const double> q, std::span<const double> p, double eps,
                    std::size_t n_steps, const GradientField& grad,
                    std::span<const double> mass_diag) {
  const std::size_t d = q.size();
  PhasePoint out{{q.begin(), q.end()}, {p.begin(), p.end()}};
  std::vector<double> g(d);
  grad(out.q, g);
  if (!all_finite(g)) throw TrajectoryDivergence("non-finite gradient at trajectory start");
  for (std::size_t step = 0; step < n_steps; ++step) {
    for (std::size_t k = 0; k < d; ++k) out.p[k] += 0.5 * eps * g[k];
    for (std::size_t k = 0; k < d; ++k) out.q[k] += eps * out.p[k] / mass_diag[k];
    if (!all_finite(out.q)) throw TrajectoryDivergence("non-finite position in leapfrog");
    grad(out.q, g);
    if (!all_finite(g)) throw TrajectoryDivergence("non-finite gradient in leapfrog");
    for (std::size_t k = 0; k < d; ++k) out.p[k] += 0.5 * eps * g[k];
    if (!all_finite(out.p)) throw TrajectoryDivergence("non-finite momentum in leapfrog");
  }
  return out;
}

UnconstrainedTransform::UnconstrainedTransform(const ParameterSpace& space)
    : kinds_(space.dims()), lower_(space.lower), upper_(space.upper) {
  for (std::size_t k = 0; k < space.dims(); ++k) {
    const bool lo = std::isfinite(space.lower[k]);
    const bool hi = std::isfinite(space.upper[k]);
    kinds_[k] = lo && hi ? Kind::interval : lo ? Kind::lower : hi ? Kind::upper : Kind::free;
    if (kinds_[k] != Kind::free) identity_ = false;
  }
}

void UnconstrainedTransform::to_constrained(std::span<const double> y, std::span<double> x) const {
  for (std::size_t k = 0; k < y.size(); ++k) {
    switch (kinds_[k]) {
      case Kind::free: x[k] = y[k]; break;
      case Kind::lower: x[k] = lower_[k] + std::exp(y[k]); break;
      case Kind::upper: x[k] = upper_[k] - std::exp(y[k]); break;
      case Kind::interval: x[k] = lower_[k] + (upper_[k] - lower_[k]) * logistic(y[k]); break;
    }
  }
}

void UnconstrainedTransform::to_unconstrained(std::span<const double> x,
                                              std::span<double> y) const {
  for (std::size_t k = 0; k < x.size(); ++k) {
    switch (kinds_[k]) {
      case Kind::free: y[k] = x[k]; break;
      case Kind::lower: y[k] = std::log(x[k] - lower_[k]); break;
      case Kind::upper: y[k] = std::log(upper_[k] - x[k]); break;
      case Kind::interval: {
        const double t = (x[k] - lower_[k]) / (upper_[k] - lower_[k]);
        y[k] = std::log(t) - std::log1p(-t);
        break;
      }
    }
  }
}

double UnconstrainedTransform::log_jacobian(std::span<const double> y) const {
  double total = 0.0;
  for (std::size_t k = 0; k < y.size(); ++k) {
    switch (kinds_[k]) {
      case Kind::free: break;
      case Kind::lower:
      case Kind::upper: total += y[k]; break;
      case Kind::interval: {
        // log sigma(y) + log(1 - sigma(y)) = -|y| - 2 log(1 + exp(-|y|))
        const double a = std::abs(y[k]);
        total += std::log(upper_[k] - lower_[k]) - a - 2.0 * std::log1p(std::exp(-a));
        break;
      }
    }
  }
  return total;
}

void UnconstrainedTransform::derivatives(std::span<const double> y, std::span<double> dx_dy,
                                         std::span<double> dlogj_dy) const {
  for (std::size_t k = 0; k < y.size(); ++k) {
    switch (kinds_[k]) {
      case Kind::free:
        dx_dy[k] = 1.0;
        dlogj_dy[k] = 0.0;
        break;
      case Kind::lower:
        dx_dy[k] = std::exp(y[k]);
        dlogj_dy[k] = 1.0;
        break;
      case Kind::upper:
        dx_dy[k] = -std::exp(y[k]);
        dlogj_dy[k] = 1.0;
        break;
      case Kind::interval: {
        const double s = logistic(y[k]);
        dx_dy[k] = (upper_[k] - lower_[k]) * s * (1.0 - s);
        dlogj_dy[k] = 1.0 - 2.0 * s;
        break;
      }
    }
  }
}

HmcTarget::HmcTarget(DensityModel target, GradientMode mode, double fd_step)
    : target_(std::move(target)), transform_(target_->space()), mode_(mode), fd_step_(fd_step) {
  if (!target_->differentiable()) {
    throw UnsupportedOperation(
        "target is not differentiable (e.g. hierarchical prior); use the MH sampler");
  }
  if (mode_ == GradientMode::automatic) {
    mode_ = target_->has_gradient() ? GradientMode::user_supplied : GradientMode::finite_difference;
  }
  if (mode_ == GradientMode::user_supplied && !target_->has_gradient()) {
    throw UnsupportedOperation("target provides no gradient; use finite differences");
  }
  if (!(fd_step_ > 0.0)) throw ContractViolation("finite-difference step must be positive");
}

double HmcTarget::log_density(std::span<const double> y) const {
  std::vector<double> x(y.size());
  transform_.to_constrained(y, x);
  const double lp = target_->log_density(x);
  if (lp == kNegInf) return lp;
  return lp + transform_.log_jacobian(y);
}

void HmcTarget::gradient(std::span<const double> y, std::span<double> out) const {
  if (mode_ == GradientMode::finite_difference) {
    fd_gradient([this](std::span<const double> v) { return log_density(v); }, y, fd_step_, out);
    return;
  }
  const std::size_t d = y.size();
  std::vector<double> x(d), dx(d), dlogj(d);
  transform_.to_constrained(y, x);
  target_->gradient(x, out);
  if (transform_.identity()) return;
  transform_.derivatives(y, dx, dlogj);
  for (std::size_t k = 0; k < d; ++k) out[k] = out[k] * dx[k] + dlogj[k];
}

HmcChainState HmcChainState::start(const HmcTarget& target, std::span<const double> x,
                                   std::uint64_t chain_id) {
  const std::size_t d = x.size();
  HmcChainState s;
  s.y.resize(d);
  target.transform().to_unconstrained(x, s.y);
  for (auto& v : s.y) v = std::clamp(v, -700.0, 700.0);
  s.chain.position.resize(d);
  target.transform().to_constrained(s.y, s.chain.position);
  s.chain.chain_id = chain_id;
  s.chain.log_target = target.model().log_density(s.chain.position);
  s.log_density_y = target.log_density(s.y);
  if (!std::isfinite(s.log_density_y)) {
    throw ContractViolation("HMC start point lies outside the support");
  }
  return s;
}

HmcStepResult hmc_step(HmcChainState& state, const HmcTarget& target, const HmcHyper& hyper,
                       RngNode& rng, SampleBatch* out) {
  const std::size_t d = state.y.size();
  std::vector<double> p(d);
  for (std::size_t k = 0; k < d; ++k) p[k] = std::sqrt(hyper.mass_diag[k]) * rng.normal();
  const double h_start = -state.log_density_y + kinetic_energy(p, hyper.mass_diag);

  HmcStepResult result;
  PhasePoint end;
  double log_density_end = kNegInf;
  try {
    end = leapfrog(state.y, p, hyper.step_size, hyper.n_leapfrog,
                   [&](std::span<const double> q, std::span<double> g) { target.gradient(q, g); },
                   hyper.mass_diag);
    log_density_end = target.log_density(end.q);
  } catch (const TrajectoryDivergence&) {
    result.diverged = true;
  } catch (const ContractViolation&) {
    // FD stencil stepped out of the support along the trajectory.
    result.diverged = true;
  }

  const double u = rng.uniform();
  if (!result.diverged) {
    const double h_end = -log_density_end + kinetic_energy(end.p, hyper.mass_diag);
    result.accept_prob = hmc_accept_probability(h_start, h_end);
    result.accepted = u < result.accept_prob;
  }

  if (result.accepted) {
    std::vector<double> x(d);
    target.transform().to_constrained(end.q, x);
    const double lx = target.model().log_density(x);
    state.chain.advance(true, x, lx, out);
    state.y = std::move(end.q);
    state.log_density_y = log_density_end;
  } else {
    state.chain.advance(false, {}, 0.0, out);
  }
  return result;
}

}  // namespace baton
