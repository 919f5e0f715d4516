#include <algorithm>
#include <cmath>
#include <numeric>

#include "baton/error.hpp"
#include "baton/optimize.hpp"

namespace baton {

namespace {

double norm_inf(std::span<const double> x) {
  double m = 0.0;
  for (double v : x) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace

NelderMeadResult nelder_mead(const std::function<double(std::span<const double>)>& f,
                             std::span<const double> start, NelderMeadOptions options) {
  const std::size_t d = start.size();
  if (d == 0) throw ContractViolation("nelder_mead needs at least one dimension");

  NelderMeadResult res;
  auto eval = [&](const std::vector<double>& x) {
    ++res.evaluations;
    const double v = f(x);
    return std::isnan(v) ? kInf : v;
  };

  std::vector<std::vector<double>> simplex(d + 1, std::vector<double>(start.begin(), start.end()));
  std::vector<double> fv(d + 1);
  fv[0] = eval(simplex[0]);
  for (std::size_t i = 0; i < d; ++i) {
    const double step = start[i] != 0.0 ? 0.05 * std::abs(start[i]) : 0.00025;
    simplex[i + 1][i] += step;
    fv[i + 1] = eval(simplex[i + 1]);
    if (!std::isfinite(fv[i + 1])) {
      simplex[i + 1][i] = start[i] - step;
      fv[i + 1] = eval(simplex[i + 1]);
    }
  }

  std::vector<std::size_t> order(d + 1);
  std::vector<double> centroid(d), xr(d), xe(d), xc(d);
  auto along = [&](double t, std::vector<double>& out, const std::vector<double>& worst) {
    for (std::size_t k = 0; k < d; ++k) out[k] = centroid[k] + t * (worst[k] - centroid[k]);
  };

  while (true) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
    const std::size_t best = order.front(), worst = order.back(), second = order[d - 1];

    double diameter = 0.0;
    for (std::size_t i = 0; i <= d; ++i) {
      for (std::size_t k = 0; k < d; ++k) {
        diameter = std::max(diameter, std::abs(simplex[i][k] - simplex[best][k]));
      }
    }
    if (diameter < options.rel_tol * std::max(1.0, norm_inf(simplex[best]))) {
      res.converged = true;
      break;
    }
    if (res.evaluations >= options.max_evaluations) break;

    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t i = 0; i <= d; ++i) {
      if (i == worst) continue;
      for (std::size_t k = 0; k < d; ++k) centroid[k] += simplex[i][k];
    }
    for (auto& c : centroid) c /= static_cast<double>(d);

    along(-1.0, xr, simplex[worst]);
    const double fr = eval(xr);
    if (fr < fv[best]) {
      along(-2.0, xe, simplex[worst]);
      const double fe = eval(xe);
      if (fe < fr) {
        simplex[worst] = xe;
        fv[worst] = fe;
      } else {
        simplex[worst] = xr;
        fv[worst] = fr;
      }
      continue;
    }
    if (fr < fv[second]) {
      simplex[worst] = xr;
      fv[worst] = fr;
      continue;
    }
    const bool outside = fr < fv[worst];
    along(outside ? -0.5 : 0.5, xc, simplex[worst]);
    const double fc = eval(xc);
    if (fc < (outside ? fr : fv[worst])) {
      simplex[worst] = xc;
      fv[worst] = fc;
      continue;
    }
    for (std::size_t i = 0; i <= d; ++i) {
      if (i == best) continue;
      for (std::size_t k = 0; k < d; ++k) {
        simplex[i][k] = simplex[best][k] + 0.5 * (simplex[i][k] - simplex[best][k]);
      }
      fv[i] = eval(simplex[i]);
    }
  }

  const auto best = static_cast<std::size_t>(std::min_element(fv.begin(), fv.end()) - fv.begin());
  res.x = simplex[best];
  res.value = fv[best];
  return res;
}

std::vector<double> refine_mode(const Density& target, std::span<const double> start,
                                NelderMeadOptions options) {
  if (start.size() != target.dims()) throw ContractViolation("refine_mode: wrong start length");
  if (!std::isfinite(target.log_density(start))) {
    throw ContractViolation("refine_mode: start point is outside the support");
  }
  auto neg = [&](std::span<const double> x) {
    const double v = target.log_density(x);
    return std::isfinite(v) ? -v : kInf;
  };
  return nelder_mead(neg, start, options).x;
}

}  // namespace baton
