#include <cmath>

#include <Eigen/Dense>

#include "doctest.h"

#include "baton/diagnostics.hpp"
#include "baton/error.hpp"
#include "baton/hmc.hpp"
#include "baton/sampling.hpp"
#include "baton/test_densities.hpp"

using namespace baton;

namespace {

const std::vector<double> kUnitMass2{1.0, 1.0};

GradientField oscillator() {
  return [](std::span<const double> q, std::span<double> g) {
    for (std::size_t k = 0; k < q.size(); ++k) g[k] = -q[k];
  };
}

// log pi = -q1^4/4 - q2^2/2 - q1 q2 / 4, nonlinear in q1.
GradientField quartic() {
  return [](std::span<const double> q, std::span<double> g) {
    g[0] = -q[0] * q[0] * q[0] - 0.25 * q[1];
    g[1] = -q[1] - 0.25 * q[0];
  };
}

}  // namespace

TEST_CASE("finite-difference gradient") {
  const ScalarField quad = [](std::span<const double> q) { return -0.5 * q[0] * q[0]; };
  std::vector<double> g(1);
  fd_gradient(quad, std::vector<double>{3.0}, 1e-6, g);
  CHECK(std::abs(g[0] + 3.0) < 1e-6);

  const ScalarField flat = [](std::span<const double>) { return 4.0; };
  fd_gradient(flat, std::vector<double>{1.0}, 1e-6, g);
  CHECK(g[0] == 0.0);

  const auto normal = make_test_density("normal", 2);
  const auto gn = fd_gradient(*normal, std::vector<double>{15.0, 10.0});
  CHECK(std::abs(gn[0]) < 1e-6);
  CHECK(std::abs(gn[1]) < 1e-6);

  const auto u = make_uniform_prior({0.0}, {1.0});
  CHECK_THROWS_AS(fd_gradient(*u, std::vector<double>{1.0}), ContractViolation);
}

TEST_CASE("leapfrog energy, reversibility and limits") {
  const std::vector<double> q{1.0, -0.5}, p{0.3, 0.8};
  const auto h = [](const PhasePoint& s) {
    return 0.5 * (s.q[0] * s.q[0] + s.q[1] * s.q[1]) + kinetic_energy(s.p, kUnitMass2);
  };
  const PhasePoint start{q, p};
  const auto end = leapfrog(q, p, 0.1, 10, oscillator(), kUnitMass2);
  CHECK(std::abs(h(end) - h(start)) < 1e-2);

  const std::vector<double> neg{-end.p[0], -end.p[1]};
  const auto back = leapfrog(end.q, neg, 0.1, 10, quartic(), kUnitMass2);
  const auto back_osc = leapfrog(end.q, neg, 0.1, 10, oscillator(), kUnitMass2);
  for (int k = 0; k < 2; ++k) {
    CHECK(std::abs(back_osc.q[k] - q[k]) < 1e-10);
    CHECK(std::abs(back_osc.p[k] + p[k]) < 1e-10);
  }
  const auto fwd = leapfrog(q, p, 0.05, 20, quartic(), kUnitMass2);
  const std::vector<double> nf{-fwd.p[0], -fwd.p[1]};
  const auto rev = leapfrog(fwd.q, nf, 0.05, 20, quartic(), kUnitMass2);
  for (int k = 0; k < 2; ++k) {
    CHECK(std::abs(rev.q[k] - q[k]) < 1e-10);
    CHECK(std::abs(rev.p[k] + p[k]) < 1e-10);
  }
  (void)back;

  const auto tiny = leapfrog(q, p, 1e-9, 1, quartic(), kUnitMass2);
  CHECK(std::abs(tiny.q[0] - q[0]) < 1e-8);

  const GradientField blowup = [](std::span<const double>, std::span<double> g) {
    g[0] = std::nan("");
    g[1] = 0.0;
  };
  CHECK_THROWS_AS(leapfrog(q, p, 0.1, 3, blowup, kUnitMass2), TrajectoryDivergence);
}

TEST_CASE("leapfrog preserves phase-space volume") {
  RngNode rng = root_rng(5);
  const std::vector<double> mass{0.5, 2.0};
  for (int rep = 0; rep < 10; ++rep) {
    std::vector<double> z(4);
    for (auto& v : z) v = rng.normal();
    auto map = [&](const std::vector<double>& s) {
      const auto r = leapfrog(std::span(s).first(2), std::span(s).subspan(2), 0.1, 5, quartic(), mass);
      return std::vector<double>{r.q[0], r.q[1], r.p[0], r.p[1]};
    };
    Eigen::Matrix4d J;
    const double h = 1e-5;
    for (int j = 0; j < 4; ++j) {
      auto zp = z, zm = z;
      zp[j] += h;
      zm[j] -= h;
      const auto fp = map(zp), fm = map(zm);
      for (int i = 0; i < 4; ++i) J(i, j) = (fp[i] - fm[i]) / (2 * h);
    }
    CHECK(std::abs(J.determinant() - 1.0) < 1e-8);
  }
}

TEST_CASE("acceptance probability") {
  CHECK(hmc_accept_probability(3.0, 3.0) == 1.0);
  CHECK(hmc_accept_probability(3.0, kInf) == 0.0);
  CHECK(hmc_accept_probability(3.0, std::nan("")) == 0.0);
  CHECK(hmc_accept_probability(0.0, std::log(2.0)) == doctest::Approx(0.5));
}

TEST_CASE("dual averaging") {
  HmcHyper h = HmcHyper::initial(2);
  double prev = h.step_size;
  for (int i = 0; i < 50; ++i) {
    h = adapt_step_size(h, 0.0);
    CHECK(h.step_size < prev);
    prev = h.step_size;
  }
  h = HmcHyper::initial(2);
  prev = h.step_size;
  for (int i = 0; i < 50; ++i) {
    h = adapt_step_size(h, 1.0);
    CHECK(h.step_size > prev);
    prev = h.step_size;
  }
  h = HmcHyper::initial(2);
  for (int i = 0; i < 1000; ++i) h = adapt_step_size(h, 0.8);
  const double e0 = final_step_size(h);
  for (int i = 0; i < 100; ++i) h = adapt_step_size(h, 0.8);
  CHECK(std::abs(final_step_size(h) / e0 - 1.0) < 1e-3);
}

TEST_CASE("unconstrained transform") {
  const auto space = ParameterSpace::box({0.0, -kInf, 2.0}, {1.0, kInf, kInf});
  const UnconstrainedTransform t(space);
  CHECK_FALSE(t.identity());
  const std::vector<double> x{0.3, -4.0, 5.0};
  std::vector<double> y(3), back(3);
  t.to_unconstrained(x, y);
  t.to_constrained(y, back);
  for (int k = 0; k < 3; ++k) CHECK(back[k] == doctest::Approx(x[k]));
  CHECK(y[1] == -4.0);

  // Jacobian against numerical dx/dy.
  double logj = 0.0;
  for (int k = 0; k < 3; ++k) {
    auto yp = y, ym = y;
    yp[k] += 1e-6;
    ym[k] -= 1e-6;
    std::vector<double> xp(3), xm(3);
    t.to_constrained(yp, xp);
    t.to_constrained(ym, xm);
    logj += std::log(std::abs((xp[k] - xm[k]) / 2e-6));
  }
  CHECK(t.log_jacobian(y) == doctest::Approx(logj).epsilon(1e-6));

  CHECK(UnconstrainedTransform(ParameterSpace::unbounded(2)).identity());
}

TEST_CASE("transformed target integrates like the original") {
  // Uniform(0,1) in logit coordinates is the logistic density.
  const HmcTarget t(make_uniform_prior({0.0}, {1.0}), GradientMode::finite_difference);
  double total = 0.0;
  const double dy = 0.01;
  for (double y = -40.0; y < 40.0; y += dy) total += std::exp(t.log_density(std::vector<double>{y})) * dy;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-6));
  std::vector<double> g(1);
  t.gradient(std::vector<double>{0.7}, g);
  CHECK(g[0] == doctest::Approx(-std::tanh(0.35)).epsilon(1e-5));
}

TEST_CASE("non-differentiable targets are rejected") {
  FunctionDensitySpec f;
  f.space = ParameterSpace::unbounded(1);
  f.log_density = [](std::span<const double> x) { return -std::abs(x[0]); };
  f.differentiable = false;
  CHECK_THROWS_AS(HmcTarget(make_function_density(f), GradientMode::automatic), UnsupportedOperation);
  f.differentiable = true;
  CHECK_THROWS_AS(HmcTarget(make_function_density(f), GradientMode::user_supplied),
                  UnsupportedOperation);
}

TEST_CASE("HMC on normal targets") {
  SamplerConfig cfg;
  cfg.kind = SamplerKind::hmc;
  cfg.burnin.n_final_samples = 10000;
  const auto target = make_normal({1.0, -2.0}, {4.0, 0.0, 0.0, 0.25});
  const auto r = sample_posterior(target, cfg, root_rng(21));
  REQUIRE(r.converged);
  for (double a : r.acceptance_rates) CHECK(a > 0.6);

  const double mu[2] = {1.0, -2.0}, var[2] = {4.0, 0.25};
  // HMC is antithetic on Gaussians, so the mean and the variance need their
  // own effective sizes: ESS of x and of (x - mu)^2.
  SampleBatch sq(2);
  for (std::size_t i = 0; i < r.samples.size(); ++i) {
    const std::vector<double> d{std::pow(r.samples.value(i, 0) - mu[0], 2),
                                std::pow(r.samples.value(i, 1) - mu[1], 2)};
    sq.push_back(d, r.samples.weights()[i], 0.0, r.samples.chain_ids()[i], r.samples.steps()[i]);
  }
  const auto e = ess(r.samples);
  const auto e2 = ess(sq);
  for (std::size_t k = 0; k < 2; ++k) {
    const auto pe = point_estimates(r.samples, k);
    CHECK(std::abs(pe.mean - mu[k]) < 3.0 * std::sqrt(var[k] / e[k]));
    // Var of the sample variance of a normal is 2 sigma^4 / n.
    CHECK(std::abs(pe.std * pe.std - var[k]) < 3.0 * var[k] * std::sqrt(2.0 / e2[k]));
  }
}

TEST_CASE("HMC on the 20D funnel") {
  SamplerConfig cfg;
  cfg.kind = SamplerKind::hmc;
  cfg.burnin.n_final_samples = 100000;
  const auto t = make_test_target({{"name", "funnel"}, {"dims", 20}});
  const auto r = sample_posterior(t.model, cfg, root_rng(42));
  // The neck coordinate mixes slowly under fixed-length trajectories
  // (tau near 10^3), so the KS test runs at whatever ESS was reached.
  const auto e = ess(r.samples);
  CHECK(e[0] >= 100.0);
  RngNode iid = root_rng(43);
  const auto ref = prior_iid_sample(*t.model, iid, 100000);
  const auto x = r.samples.column(0);
  const auto ks = ks_two_sample(x, r.samples.weights(), ref.column(0), ref.weights(), e[0], 1e5);
  CHECK(ks.p_value > 0.01);
}
