#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "baton/error.hpp"
#include "baton/io.hpp"

namespace baton {

namespace {

constexpr std::size_t kMaxAxisBins = 2000;

struct Axis {
  double lower = 0.0;
  double width = 1.0;
  std::size_t bins = 1;

  std::size_t index(double x) const {
    if (bins == 1) return 0;
    const auto b = static_cast<std::size_t>(std::max(0.0, (x - lower) / width));
    return std::min(b, bins - 1);
  }
};

Axis make_axis(const SampleBatch& batch, std::size_t k, BinningRule rule) {
  Axis a;
  const auto x = batch.column(k);
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  if (!(*hi > *lo) || batch.total_weight() < 2.0) {
    a.lower = *lo - 0.5;
    return a;
  }
  a.bins = std::min<std::size_t>(bin_count(x, batch.weights(), rule), kMaxAxisBins);
  a.lower = *lo;
  a.width = (*hi - *lo) / static_cast<double>(a.bins);
  return a;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

Histogram1D density_histogram(const SampleBatch& batch, std::size_t k, BinningRule rule) {
  Histogram1D h = marginal_histogram(batch, k, rule);
  const double total = std::accumulate(h.weights.begin(), h.weights.end(), 0.0);
  for (auto& w : h.weights) w /= total * h.width;
  return h;
}

Histogram2D density_histogram_2d(const SampleBatch& batch, std::size_t k, std::size_t l,
                                 const std::vector<double>& levels, BinningRule rule) {
  if (batch.empty()) throw ContractViolation("histogram of an empty batch");
  if (k >= batch.dims() || l >= batch.dims()) {
    throw ContractViolation("histogram: dimension out of range");
  }
  for (double p : levels) {
    if (!(p > 0.0 && p <= 100.0)) throw ContractViolation("probability levels are percentages in (0, 100]");
  }
  const Axis ax = make_axis(batch, k, rule), ay = make_axis(batch, l, rule);
  Histogram2D h;
  h.x_lower = ax.lower;
  h.x_width = ax.width;
  h.y_lower = ay.lower;
  h.y_width = ay.width;
  h.nx = ax.bins;
  h.ny = ay.bins;
  h.density.assign(h.nx * h.ny, 0.0);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    h.density[ax.index(batch.value(i, k)) * h.ny + ay.index(batch.value(i, l))] +=
        batch.weights()[i];
  }
  const double total = batch.total_weight();

  // Highest-density regions: fill bins in decreasing density until the mass
  // reaches each level; the bin that crosses a level belongs to it.
  std::vector<std::size_t> order(h.density.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return h.density[a] > h.density[b]; });
  std::vector<double> sorted_levels(levels);
  std::sort(sorted_levels.begin(), sorted_levels.end());
  h.level.assign(h.density.size(), 100.0);
  double before = 0.0;
  for (auto b : order) {
    if (h.density[b] <= 0.0) break;
    for (double p : sorted_levels) {
      if (before < p / 100.0 * total) {
        h.level[b] = p;
        break;
      }
    }
    before += h.density[b];
  }
  for (auto& v : h.density) v /= total * h.x_width * h.y_width;
  return h;
}

void write_histogram(const Histogram1D& h, const std::filesystem::path& path) {
  std::string text = "bin_center,density\n";
  for (std::size_t i = 0; i < h.weights.size(); ++i) {
    text += num(h.center(i)) + ',' + num(h.weights[i]) + '\n';
  }
  write_text(path, text);
}

void write_histogram(const Histogram2D& h, const std::filesystem::path& path) {
  std::string text = "bin_x,bin_y,density,level\n";
  for (std::size_t i = 0; i < h.nx; ++i) {
    for (std::size_t j = 0; j < h.ny; ++j) {
      const std::size_t b = i * h.ny + j;
      text += num(h.x_center(i)) + ',' + num(h.y_center(j)) + ',' + num(h.density[b]) + ',' +
              num(h.level[b]) + '\n';
    }
  }
  write_text(path, text);
}

}  // namespace baton
