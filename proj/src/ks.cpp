#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "baton/diagnostics.hpp"
#include "baton/error.hpp"

namespace baton {

namespace {

struct Weighted {
  std::vector<double> values;
  std::vector<double> weights;
  double total = 0.0;
};

Weighted sorted_weighted(std::span<const double> x, std::span<const double> w) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return x[i] < x[j]; });
  Weighted out;
  out.values.reserve(x.size());
  out.weights.reserve(x.size());
  for (auto i : order) {
    out.values.push_back(x[i]);
    out.weights.push_back(w.empty() ? 1.0 : w[i]);
    out.total += out.weights.back();
  }
  return out;
}

double ks_statistic(const Weighted& a, const Weighted& b) {
  std::size_t i = 0, j = 0;
  double fa = 0.0, fb = 0.0, d = 0.0;
  while (i < a.values.size() || j < b.values.size()) {
    double x;
    if (j >= b.values.size() || (i < a.values.size() && a.values[i] <= b.values[j])) {
      x = a.values[i];
    } else {
      x = b.values[j];
    }
    while (i < a.values.size() && a.values[i] == x) fa += a.weights[i++];
    while (j < b.values.size() && b.values[j] == x) fb += b.weights[j++];
    d = std::max(d, std::abs(fa / a.total - fb / b.total));
  }
  return d;
}

}  // namespace

double kolmogorov_survival(double lambda) {
  if (!(lambda > 0.0)) return 1.0;
  if (lambda < 1.18) {
    // P(K <= lambda) = sqrt(2 pi)/lambda * sum exp(-(2j-1)^2 pi^2 / (8 lambda^2))
    const double pi2 = std::numbers::pi * std::numbers::pi;
    double cdf = 0.0;
    for (int j = 1; j <= 20; ++j) {
      const double t = 2.0 * j - 1.0;
      const double term = std::exp(-t * t * pi2 / (8.0 * lambda * lambda));
      cdf += term;
      if (term < 1e-18 * cdf) break;
    }
    cdf *= std::sqrt(2.0 * std::numbers::pi) / lambda;
    return std::clamp(1.0 - cdf, 0.0, 1.0);
  }
  double q = 0.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = std::exp(-2.0 * j * j * lambda * lambda);
    q += (j % 2 == 1 ? 2.0 : -2.0) * term;
    if (term < 1e-18) break;
  }
  return std::clamp(q, 0.0, 1.0);
}

KsResult ks_two_sample(std::span<const double> a, std::span<const double> wa,
                       std::span<const double> b, std::span<const double> wb, double n_eff_a,
                       double n_eff_b) {
  if (a.empty() || b.empty()) throw ContractViolation("KS test needs two non-empty samples");
  if ((!wa.empty() && wa.size() != a.size()) || (!wb.empty() && wb.size() != b.size())) {
    throw ContractViolation("KS weights do not match the samples");
  }
  if (!(n_eff_a > 0.0 && n_eff_b > 0.0)) throw ContractViolation("KS effective sizes must be positive");
  KsResult r;
  r.statistic = ks_statistic(sorted_weighted(a, wa), sorted_weighted(b, wb));
  r.n_eff = n_eff_a * n_eff_b / (n_eff_a + n_eff_b);
  const double sq = std::sqrt(r.n_eff);
  r.p_value = kolmogorov_survival((sq + 0.12 + 0.11 / sq) * r.statistic);
  return r;
}

KsResult ks_two_sample(std::span<const double> a, std::span<const double> b, double n_eff_a,
                       double n_eff_b) {
  return ks_two_sample(a, {}, b, {}, n_eff_a, n_eff_b);
}

}  // namespace baton
