#include <algorithm>
#include <cmath>
#include <numeric>

#include "baton/diagnostics.hpp"
#include "baton/error.hpp"

namespace baton {

namespace {

constexpr double kMaxBins = 1e6;

std::size_t clamp_count(double c) {
  if (!std::isfinite(c) || c < 1.0) return 1;
  return static_cast<std::size_t>(std::min(c, kMaxBins));
}

std::size_t sturges(double n) { return clamp_count(std::ceil(std::log2(n)) + 1.0); }

double weighted_sd(std::span<const double> x, std::span<const double> w, double total) {
  double mean = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) mean += w[i] * x[i];
  mean /= total;
  double ss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) ss += w[i] * (x[i] - mean) * (x[i] - mean);
  return total > 1.0 ? std::sqrt(ss / (total - 1.0)) : 0.0;
}

}  // namespace

BinningRule parse_binning_rule(const std::string& name) {
  if (name == "sqrt") return BinningRule::sqrt;
  if (name == "sturges") return BinningRule::sturges;
  if (name == "rice") return BinningRule::rice;
  if (name == "scott") return BinningRule::scott;
  if (name == "freedman_diaconis" || name == "fd") return BinningRule::freedman_diaconis;
  throw ContractViolation("unknown binning rule '" + name + "'");
}

const char* to_string(BinningRule rule) noexcept {
  switch (rule) {
    case BinningRule::sqrt: return "sqrt";
    case BinningRule::sturges: return "sturges";
    case BinningRule::rice: return "rice";
    case BinningRule::scott: return "scott";
    case BinningRule::freedman_diaconis: return "freedman_diaconis";
  }
  return "?";
}

std::size_t bin_count(std::span<const double> data, std::span<const double> weights,
                      BinningRule rule) {
  if (!weights.empty() && weights.size() != data.size()) {
    throw ContractViolation("bin_count: weights do not match data");
  }
  std::vector<double> unit;
  if (weights.empty()) {
    unit.assign(data.size(), 1.0);
    weights = unit;
  }
  const double n = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (data.empty() || n < 2.0) throw ContractViolation("bin_count needs at least two points");

  switch (rule) {
    case BinningRule::sqrt: return clamp_count(std::ceil(std::sqrt(n)));
    case BinningRule::sturges: return sturges(n);
    case BinningRule::rice: return clamp_count(std::ceil(2.0 * std::cbrt(n)));
    case BinningRule::scott:
    case BinningRule::freedman_diaconis: break;
  }
  const auto [lo, hi] = std::minmax_element(data.begin(), data.end());
  const double range = *hi - *lo;
  double width = 0.0;
  if (rule == BinningRule::scott) {
    width = 3.49 * weighted_sd(data, weights, n) / std::cbrt(n);
  } else {
    const double iqr =
        weighted_quantile(data, weights, 0.75) - weighted_quantile(data, weights, 0.25);
    width = 2.0 * iqr / std::cbrt(n);
  }
  if (!(range > 0.0) || !(width > 0.0)) return sturges(n);
  return clamp_count(std::ceil(range / width));
}

std::size_t bin_count(std::span<const double> data, BinningRule rule) {
  return bin_count(data, {}, rule);
}

double weighted_quantile(std::span<const double> values, std::span<const double> weights,
                         double q) {
  if (values.empty()) throw ContractViolation("weighted_quantile of an empty sample");
  if (!weights.empty() && weights.size() != values.size()) {
    throw ContractViolation("weighted_quantile: weights do not match values");
  }
  if (!(q >= 0.0 && q <= 1.0)) throw ContractViolation("quantile level must lie in [0, 1]");
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  auto w = [&](std::size_t i) { return weights.empty() ? 1.0 : weights[i]; };
  double total = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) total += w(i);
  const double target = q * total;
  double cum = 0.0;
  for (auto i : order) {
    cum += w(i);
    if (cum >= target) return values[i];
  }
  return values[order.back()];
}

PointEstimates point_estimates(const SampleBatch& batch, std::size_t k,
                               std::vector<double> levels) {
  if (batch.empty()) throw ContractViolation("point estimates of an empty batch");
  if (k >= batch.dims()) throw ContractViolation("point estimates: dimension out of range");
  const auto x = batch.column(k);
  const auto& w = batch.weights();
  const double total = batch.total_weight();
  PointEstimates pe;
  for (std::size_t i = 0; i < x.size(); ++i) pe.mean += w[i] * x[i];
  pe.mean /= total;
  pe.std = weighted_sd(x, w, total);
  pe.median = weighted_quantile(x, w, 0.5);
  pe.levels = std::move(levels);
  for (double q : pe.levels) pe.quantiles.push_back(weighted_quantile(x, w, q));
  return pe;
}

Histogram1D marginal_histogram(const SampleBatch& batch, std::size_t k, BinningRule rule) {
  if (batch.empty()) throw ContractViolation("histogram of an empty batch");
  if (k >= batch.dims()) throw ContractViolation("histogram: dimension out of range");
  const auto x = batch.column(k);
  const auto& w = batch.weights();
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  Histogram1D h;
  if (!(*hi > *lo) || batch.total_weight() < 2.0) {
    h.lower = *lo - 0.5;
    h.width = 1.0;
    h.weights.assign(1, batch.total_weight());
    return h;
  }
  const std::size_t nb = bin_count(x, w, rule);
  h.lower = *lo;
  h.width = (*hi - *lo) / static_cast<double>(nb);
  h.weights.assign(nb, 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    auto b = static_cast<std::size_t>((x[i] - h.lower) / h.width);
    h.weights[std::min(b, nb - 1)] += w[i];
  }
  return h;
}

double marginal_mode(const SampleBatch& batch, std::size_t k, BinningRule rule) {
  const auto h = marginal_histogram(batch, k, rule);
  const auto best = std::max_element(h.weights.begin(), h.weights.end());
  return h.center(static_cast<std::size_t>(best - h.weights.begin()));
}

std::vector<double> pull_histogram(std::span<const double> observed,
                                   std::span<const double> expected, double min_expected) {
  if (observed.size() != expected.size()) {
    throw ContractViolation("pull histogram: observed and expected differ in length");
  }
  std::vector<double> pulls;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    if (expected[i] > min_expected) {
      pulls.push_back((observed[i] - expected[i]) / std::sqrt(expected[i]));
    }
  }
  return pulls;
}

PullStats pull_stats(std::span<const double> pulls) {
  PullStats s;
  s.bins = pulls.size();
  if (pulls.empty()) return s;
  s.mean = std::accumulate(pulls.begin(), pulls.end(), 0.0) / static_cast<double>(pulls.size());
  double ss = 0.0;
  for (double p : pulls) ss += (p - s.mean) * (p - s.mean);
  s.sd = pulls.size() > 1 ? std::sqrt(ss / static_cast<double>(pulls.size() - 1)) : 0.0;
  return s;
}

}  // namespace baton
