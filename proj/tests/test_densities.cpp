#include <cmath>
#include <numbers>

#include "doctest.h"

#include "baton/density.hpp"
#include "baton/diagnostics.hpp"
#include "baton/error.hpp"
#include "baton/hmc.hpp"
#include "baton/test_densities.hpp"

using namespace baton;

namespace {

DensityModel constant_density(ParameterSpace space, double value, DensityRole role) {
  FunctionDensitySpec f;
  f.space = std::move(space);
  f.role = role;
  f.log_density = [value](std::span<const double>) { return value; };
  return make_function_density(std::move(f));
}

}  // namespace

TEST_CASE("parameter space validation") {
  CHECK_NOTHROW(ParameterSpace::box({0.0}, {1.0}).validate());
  CHECK_THROWS_AS(ParameterSpace::box({1.0}, {1.0}), ContractViolation);
  CHECK_THROWS_AS(ParameterSpace::box({0.0, 0.0}, {1.0}), ContractViolation);
  const auto s = ParameterSpace::box({0.0, -1.0}, {1.0, kInf});
  CHECK(s.contains(std::vector<double>{0.5, 100.0}));
  CHECK_FALSE(s.contains(std::vector<double>{1.5, 0.0}));
}

TEST_CASE("log_density contract") {
  const auto normal1 = make_normal({0.0}, {1.0});
  CHECK(normal1->log_density(std::vector<double>{0.0}) ==
        doctest::Approx(-0.5 * std::log(2.0 * std::numbers::pi)));
  CHECK_THROWS_AS(normal1->log_density(std::vector<double>{0.0, 1.0}), ContractViolation);

  const auto prior = make_uniform_prior({0.0}, {1.0});
  CHECK(prior->log_density(std::vector<double>{2.0}) == kNegInf);
  CHECK(prior->log_density(std::vector<double>{0.5}) == 0.0);

  const auto n2 = make_test_density("normal", 2);
  CHECK(n2->log_density(std::vector<double>{15.0, 10.0}) ==
        doctest::Approx(-std::log(2.0 * std::numbers::pi * 1.5 * 2.5)));

  FunctionDensitySpec bad;
  bad.space = ParameterSpace::unbounded(1);
  bad.log_density = [](std::span<const double>) { return std::nan(""); };
  CHECK_THROWS_AS(make_function_density(bad)->log_density(std::vector<double>{0.0}), NumericalError);
  bad.log_density = [](std::span<const double>) { return kInf; };
  CHECK_THROWS_AS(make_function_density(bad)->log_density(std::vector<double>{0.0}), NumericalError);
}

TEST_CASE("posterior is likelihood plus prior") {
  const auto prior = make_uniform_prior({0.0}, {1.0});
  const auto zero = constant_density(prior->space(), 0.0, DensityRole::likelihood);
  const auto minus_one = constant_density(prior->space(), -1.0, DensityRole::likelihood);
  const auto post0 = build_posterior(zero, prior);
  const auto post1 = build_posterior(minus_one, prior);
  CHECK(post0->role() == DensityRole::posterior);
  CHECK(post0->prior() == prior.get());
  for (double x : {0.0, 0.25, 0.999}) {
    const std::vector<double> p{x};
    CHECK(post0->log_density(p) == prior->log_density(p));
    CHECK(post1->log_density(p) == -1.0);
  }
  CHECK(post1->log_density(std::vector<double>{1.5}) == kNegInf);

  const auto other = constant_density(ParameterSpace::box({0.0}, {2.0}), 0.0, DensityRole::likelihood);
  CHECK_THROWS_AS(build_posterior(other, prior), ContractViolation);

  // Pointwise additivity on a curved pair.
  const auto like = make_normal({0.3}, {0.04});
  FunctionDensitySpec f;
  f.space = prior->space();
  f.log_density = [&](std::span<const double> x) { return like->log_density(x); };
  const auto post = build_posterior(make_function_density(f), prior);
  for (double x : {0.1, 0.3, 0.7}) {
    const std::vector<double> p{x};
    CHECK(post->log_density(p) == like->log_density(p) + prior->log_density(p));
  }
}

TEST_CASE("iid prior samples") {
  RngNode rng = root_rng(1);
  const auto u = make_uniform_prior({0.0}, {10.0});
  const auto batch = prior_iid_sample(*u, rng, 100000);
  CHECK(batch.size() == 100000);
  CHECK(batch.total_weight() == 100000.0);
  double mean = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const double v = batch.value(i, 0);
    REQUIRE((v >= 0.0 && v < 10.0));
    mean += v;
  }
  CHECK(std::abs(mean / 1e5 - 5.0) < 0.03);
  CHECK(batch.log_densities()[0] == doctest::Approx(-std::log(10.0)));

  // Mean of LogNormal(log m - s^2/2, s) is m.
  const double s = 0.5;
  const auto ln = make_lognormal(std::log(4.7) - 0.5 * s * s, s);
  const auto lb = prior_iid_sample(*ln, rng, 200000);
  double lm = 0.0;
  for (std::size_t i = 0; i < lb.size(); ++i) lm += lb.value(i, 0);
  CHECK(lm / 200000.0 == doctest::Approx(4.7).epsilon(0.01));

  CHECK(prior_iid_sample(*u, rng, 0).empty());
  const auto no_iid = constant_density(ParameterSpace::box({0.0}, {1.0}), 0.0, DensityRole::prior);
  CHECK_THROWS_AS(prior_iid_sample(*no_iid, rng, 5), UnsupportedOperation);
}

TEST_CASE("hierarchical prior") {
  HierarchicalPriorSpec spec;
  spec.hyper_prior = make_uniform_prior({4.699, 0.4999}, {4.701, 0.5001});
  spec.conditional_space = ParameterSpace::box({0.0}, {kInf});
  spec.conditional = [](std::span<const double> h) {
    return make_lognormal(std::log(h[0]) - 0.5 * h[1] * h[1], h[1]);
  };
  const auto prior = make_hierarchical_prior(spec);
  CHECK(prior->dims() == 3);
  CHECK_FALSE(prior->differentiable());
  CHECK(prior->iid_capable());

  const std::vector<double> x{4.7, 0.5, 3.0};
  const auto cond = spec.conditional(std::span<const double>(x).first(2));
  CHECK(prior->log_density(x) ==
        spec.hyper_prior->log_density(std::span<const double>(x).first(2)) +
            cond->log_density(std::span<const double>(x).subspan(2)));

  RngNode rng = root_rng(3);
  const auto joint = prior_iid_sample(*prior, rng, 100000);
  const auto ref = prior_iid_sample(*cond, rng, 100000);
  const auto r = ks_two_sample(joint.column(2), ref.column(0), 1e5, 1e5);
  CHECK(r.p_value > 0.01);

  CHECK_THROWS_AS(HmcTarget(prior, GradientMode::finite_difference), UnsupportedOperation);
}

TEST_CASE("test densities: modes and symmetry") {
  const auto normal = make_test_target({{"name", "normal"}, {"dims", 2}});
  CHECK(normal.mode == std::vector<double>{15.0, 10.0});
  CHECK(*normal.variance == std::vector<double>{2.25, 6.25});

  const auto n5 = make_test_target({{"name", "normal"}, {"dims", 5}});
  CHECK(n5.mean == std::vector<double>{15.0, 10.0, 15.0, 10.0, 15.0});

  const auto funnel = make_test_target({{"name", "funnel"}, {"dims", 2}});
  CHECK(funnel.mode[0] == -1.0);
  CHECK(funnel.mode[1] == 0.0);
  CHECK((*funnel.variance)[1] == doctest::Approx(std::exp(2.0)));
  CHECK_THROWS_AS(make_test_target({{"name", "funnel"}, {"dims", 1}}), ContractViolation);
  CHECK_THROWS_AS(make_test_target({{"name", "rosenbrock"}}), ContractViolation);

  const auto cauchy = make_test_target({{"name", "multi_cauchy"}, {"dims", 3}});
  RngNode rng = root_rng(4);
  for (int i = 0; i < 100; ++i) {
    std::vector<double> x(3), nx(3);
    for (int k = 0; k < 3; ++k) {
      x[k] = 20.0 * rng.uniform() - 10.0;
      nx[k] = -x[k];
    }
    REQUIRE(cauchy.model->log_density(x) == cauchy.model->log_density(nx));
  }
  // Independent mode oracle: bisection on the derivative of one factor,
  // -2(x-5)/(1+(x-5)^2) - 2(x+5)/(1+(x+5)^2), near +5.
  auto dlog = [](double x) {
    const double a = x - 5.0, b = x + 5.0;
    const double fa = 1.0 / (1.0 + a * a), fb = 1.0 / (1.0 + b * b);
    return (-2.0 * a * fa * fa - 2.0 * b * fb * fb) / (fa + fb);
  };
  double lo = 4.0, hi = 5.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (dlog(mid) > 0.0 ? lo : hi) = mid;
  }
  CHECK(cauchy.mode[0] == doctest::Approx(0.5 * (lo + hi)).epsilon(1e-10));
}

TEST_CASE("funnel integrates to one in 2D") {
  const auto f = make_funnel(2, 1.0, 1.0);
  // Simpson over x1 in [-9, 9]; inner Simpson over x2 in +-12 e^{x1}.
  auto simpson = [](auto g, double a, double b, int n) {
    const double h = (b - a) / n;
    double s = g(a) + g(b);
    for (int i = 1; i < n; ++i) s += g(a + i * h) * (i % 2 ? 4.0 : 2.0);
    return s * h / 3.0;
  };
  const double total = simpson(
      [&](double x1) {
        const double w = 12.0 * std::exp(x1);
        return simpson([&](double x2) { return std::exp(f->log_density(std::vector<double>{x1, x2})); },
                       -w, w, 400);
      },
      -9.0, 9.0, 400);
  CHECK(std::abs(total - 1.0) < 1e-4);
}

TEST_CASE("analytic gradients agree with finite differences") {
  RngNode rng = root_rng(9);
  for (const char* name : {"normal", "multi_cauchy", "funnel"}) {
    const auto m = make_test_density(name, 3);
    CHECK(m->has_gradient());
    for (int rep = 0; rep < 5; ++rep) {
      std::vector<double> x(3), g(3);
      m->sample_iid(rng, x);
      m->gradient(x, g);
      const auto fd = fd_gradient(*m, x, 1e-6);
      for (int k = 0; k < 3; ++k) {
        CHECK(g[k] == doctest::Approx(fd[k]).epsilon(1e-5).scale(1.0));
      }
    }
  }
}

TEST_CASE("test density iid moments") {
  RngNode rng = root_rng(12);
  const auto t = make_test_target({{"name", "funnel"}, {"dims", 3}});
  const auto batch = prior_iid_sample(*t.model, rng, 400000);
  double s0 = 0.0, s0sq = 0.0, s1sq = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    s0 += batch.value(i, 0);
    s0sq += batch.value(i, 0) * batch.value(i, 0);
    s1sq += batch.value(i, 1) * batch.value(i, 1);
  }
  const double n = static_cast<double>(batch.size());
  CHECK(std::abs(s0 / n) < 0.01);
  CHECK(s0sq / n == doctest::Approx(1.0).epsilon(0.01));
  CHECK(s1sq / n == doctest::Approx(std::exp(2.0)).epsilon(0.05));
}
