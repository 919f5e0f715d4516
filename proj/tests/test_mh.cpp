#include <cmath>
#include <set>

#include "doctest.h"

#include "baton/error.hpp"
#include "baton/mh.hpp"
#include "baton/sampling.hpp"
#include "baton/test_densities.hpp"

using namespace baton;

TEST_CASE("acceptance rule") {
  CHECK(mh_accept_probability(std::log(2.0)) == 1.0);
  CHECK(mh_accept(std::log(2.0), 0.9));
  CHECK(mh_accept_probability(std::log(0.5)) == doctest::Approx(0.5));
  CHECK_FALSE(mh_accept(std::log(0.5), 0.7));
  CHECK(mh_accept(std::log(0.5), 0.3));
  CHECK(mh_accept_probability(std::log(0.4), std::log(2.0)) == doctest::Approx(0.8));
  CHECK(mh_accept_probability(kNegInf) == 0.0);
  CHECK_FALSE(mh_accept(kNegInf, 0.0));
}

TEST_CASE("rejection increments the pending weight") {
  ChainState s;
  s.position = {1.0};
  SampleBatch out(1);
  const std::vector<double> p{2.0};
  s.advance(false, p, 0.0, &out);
  s.advance(false, p, 0.0, &out);
  CHECK(s.weight_pending == 2);
  CHECK(out.empty());
  s.advance(true, p, -1.0, &out);
  REQUIRE(out.size() == 1);
  CHECK(out.weights()[0] == 2.0);
  CHECK(out.value(0, 0) == 1.0);
  s.flush(out);
  CHECK(out.total_weight() == 3.0);
  CHECK(out.steps()[1] == 2);
}

namespace {

std::vector<double> diag(const std::vector<double>& v) {
  std::vector<double> m(v.size() * v.size(), 0.0);
  for (std::size_t i = 0; i < v.size(); ++i) m[i * v.size() + i] = v[i];
  return m;
}

SampleBatch iid_normal(const std::vector<double>& var, std::size_t n, std::uint64_t seed) {
  const auto m = make_normal(std::vector<double>(var.size(), 0.0), diag(var));
  RngNode rng = root_rng(seed);
  return prior_iid_sample(*m, rng, n);
}

TunerState tally(std::size_t d, double scale, std::uint64_t acc, std::uint64_t prop) {
  const auto m = make_normal(std::vector<double>(d, 0.0), diag(std::vector<double>(d, 1.0)));
  TunerState t = TunerState::initial(*m);
  t.scale = scale;
  t.accepted = acc;
  t.proposed = prop;
  return t;
}

}  // namespace

TEST_CASE("proposal adaptation") {
  const auto samples = iid_normal({4.0, 9.0}, 100000, 5);

  auto t = tally(2, 0.7, 25, 100);
  adapt_proposal(t, samples);
  CHECK(t.scale == 0.7);
  CHECK(t.tuned);
  CHECK(t.proposed == 0);
  CHECK(std::abs(t.covariance(0, 0) / 4.0 - 1.0) < 0.05);
  CHECK(std::abs(t.covariance(1, 1) / 9.0 - 1.0) < 0.05);
  CHECK(std::abs(t.covariance(0, 1)) < 0.05 * 6.0);

  auto lo = tally(2, 1e-4, 5, 100);
  adapt_proposal(lo, samples);
  CHECK(lo.scale == 1e-4);
  CHECK_FALSE(lo.tuned);

  auto hi = tally(2, 1.0, 80, 100);
  adapt_proposal(hi, samples);
  CHECK(hi.scale == doctest::Approx(1.5));

  auto low = tally(2, 1.0, 5, 100);
  adapt_proposal(low, samples);
  CHECK(low.scale == doctest::Approx(1.0 / 1.5));

  auto none = tally(2, 1.0, 0, 100);
  const Eigen::MatrixXd before = none.covariance;
  adapt_proposal(none, samples);
  CHECK(none.covariance == before);

  const auto m = make_normal({0.0}, {1.0});
  CHECK(TunerState::initial(*m).scale == doctest::Approx(2.38));
  const auto u = make_uniform_prior({0.0, 0.0}, {12.0, 6.0});
  const auto tu = TunerState::initial(*u);
  CHECK(tu.covariance(0, 0) == doctest::Approx(12.0));
  CHECK(tu.covariance(1, 1) == doctest::Approx(3.0));
}

TEST_CASE("degenerate cycle covariance is regularized") {
  SampleBatch b(2);
  for (int i = 0; i < 50; ++i) {
    const std::vector<double> x{double(i), 2.0 * i};
    b.push_back(x, 1.0, 0.0, 0, i);
  }
  auto t = tally(2, 1.0, 25, 100);
  adapt_proposal(t, b);
  CHECK(t.cholesky.allFinite());
  CHECK((t.cholesky * t.cholesky.transpose() - t.covariance).norm() < 1e-8 * t.covariance.norm());
}

TEST_CASE("detailed balance on a five-state lattice") {
  // States k = 0..4 are the cells [k, k+1); the continuous chain visits them
  // with the tabulated probabilities.
  const std::vector<double> table{1.0, 3.0, 0.5, 2.0, 1.5};
  FunctionDensitySpec f;
  f.space = ParameterSpace::box({0.0}, {5.0});
  f.log_density = [&](std::span<const double> x) {
    const auto k = static_cast<std::size_t>(std::floor(x[0]));
    return std::log(table[std::min<std::size_t>(k, 4)]);
  };
  const auto target = make_function_density(f);
  TunerState tuner = TunerState::initial(*target);
  tuner.scale = 1.0;
  tuner.set_covariance(Eigen::MatrixXd::Identity(1, 1));

  ChainState s;
  s.position = {0.5};
  s.log_target = target->log_density(s.position);
  SampleBatch out(1);
  RngNode rng = root_rng(77);
  const std::size_t n = 1000000;
  for (std::size_t i = 0; i < n; ++i) {
    RngNode step = rng.partition(i);
    mh_step(s, *target, tuner, step, &out);
  }
  s.flush(out);
  CHECK(out.total_weight() == double(n));

  std::vector<double> freq(5, 0.0);
  for (std::size_t i = 0; i < out.size(); ++i) {
    freq[static_cast<std::size_t>(out.value(i, 0))] += out.weights()[i];
  }
  const double z = 8.0;
  double tv = 0.0;
  for (int k = 0; k < 5; ++k) tv += 0.5 * std::abs(freq[k] / double(n) - table[k] / z);
  CHECK(tv < 0.02);
}

namespace {

SamplerConfig small_config(std::size_t n) {
  SamplerConfig cfg;
  cfg.burnin.n_final_samples = n;
  return cfg;
}

}  // namespace

TEST_CASE("initial positions are distinct and reproducible") {
  const auto u = make_uniform_prior({0.0, 0.0}, {1.0, 1.0});
  const RngNode rng = root_rng(42);
  const auto a = initial_positions(*u, 4, rng);
  const auto b = initial_positions(*u, 4, rng);
  CHECK(a == b);
  std::set<std::vector<double>> distinct(a.begin(), a.end());
  CHECK(distinct.size() == 4);
}

TEST_CASE("burn-in failure paths") {
  const auto t = make_test_density("normal", 2);
  auto cfg = small_config(1000);
  cfg.burnin.max_cycles = 0;
  const auto warn = run_burnin(t, cfg, root_rng(1));
  CHECK_FALSE(warn.converged);
  CHECK(warn.cycles_used == 0);
  CHECK_FALSE(warn.warnings.empty());

  cfg.burnin.on_failure = OnFailure::error;
  CHECK_THROWS_AS(run_burnin(t, cfg, root_rng(1)), BurninFailure);

  cfg.burnin.n_chains = 1;
  CHECK_THROWS_AS(run_burnin(t, cfg, root_rng(1)), ContractViolation);
}

TEST_CASE("burn-in converges on a 2D normal") {
  const auto t = make_test_density("normal", 2);
  const auto r = run_burnin(t, small_config(100000), root_rng(42));
  CHECK(r.converged);
  CHECK(r.tuned);
  CHECK(r.cycles_used <= 30);
  for (double p : r.report.psrf) CHECK(p <= 1.1);
  CHECK(r.report.mpsrf <= 1.1);
}

TEST_CASE("main run: moments, weights and frozen tuning") {
  for (const char* name : {"normal", "funnel", "multi_cauchy"}) {
    CAPTURE(name);
    const auto t = make_test_density(name, 2);
    const auto cfg = small_config(20000);
    auto burn = run_burnin(t, cfg, root_rng(7));
    REQUIRE(burn.converged);
    for (auto& c : burn.chains) {
      c->freeze();
      const auto before = c->tuning();
      SampleBatch out(2);
      RngNode rng = root_rng(8).partition(c->state().chain_id);
      for (int i = 0; i < 20000; ++i) {
        RngNode step = rng.partition(i);
        c->step(step, &out);
      }
      c->flush(out);
      CHECK(out.total_weight() == 20000.0);
      CHECK(c->tuning() == before);
      CHECK(c->acceptance_rate() >= 0.15);
      CHECK(c->acceptance_rate() <= 0.35);
      CHECK_NOTHROW(out.validate());
    }
  }
}

TEST_CASE("posterior moments") {
  const auto normal = sample_posterior(make_test_density("normal", 2), small_config(100000), root_rng(42));
  REQUIRE(normal.converged);
  CHECK(normal.samples.total_weight() == 400000.0);
  const auto mean = weighted_mean(normal.samples);
  CHECK(std::abs(mean[0] - 15.0) < 0.05);
  CHECK(std::abs(mean[1] - 10.0) < 0.05);

  const auto funnel = sample_posterior(make_test_density("funnel", 2), small_config(100000), root_rng(42));
  const auto cov = weighted_covariance(funnel.samples);
  CHECK(std::abs(cov(0, 0) - 1.0) < 0.10);
  // The sample variance of the wide coordinate is heavy-tailed; single runs
  // scatter by about 11% (seeds 1-12), so this gate is loose.
  CHECK(std::abs(cov(1, 1) / std::exp(2.0) - 1.0) < 0.25);
}

TEST_CASE("identical seed gives identical samples") {
  const auto t = make_test_density("funnel", 2);
  const auto a = sample_posterior(t, small_config(5000), root_rng(3));
  const auto b = sample_posterior(t, small_config(5000), root_rng(3));
  const auto c = sample_posterior(t, small_config(5000), root_rng(4));
  CHECK(a.samples == b.samples);
  CHECK_FALSE(a.samples == c.samples);
}
