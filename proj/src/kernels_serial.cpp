#include <cstdlib>
#include <string>

#include "baton/kernels.hpp"

namespace baton::kernels {

namespace {

double lag_sum(const std::vector<double>& x, double mean, std::size_t lag) {
  double s = 0.0;
  for (std::size_t i = 0; i + lag < x.size(); ++i) s += (x[i] - mean) * (x[i + lag] - mean);
  return s;
}

}  // namespace

int default_threads() {
  if (const char* env = std::getenv("BATON_THREADS")) {
    try {
      const int t = std::stoi(env);
      if (t >= 1) return t;
    } catch (const std::exception&) {
    }
  }
  return 1;
}

void for_each_serial(std::size_t n, const IndexFn& fn) {
  for (std::size_t i = 0; i < n; ++i) fn(i);
}

void for_each(std::size_t n, Exec exec, const IndexFn& fn) {
  if (exec.serial() || n <= 1) {
    for_each_serial(n, fn);
  } else {
    for_each_omp(n, exec.threads, fn);
  }
}

void log_densities_serial(const Density& model, std::span<const double> points,
                          std::span<double> out) {
  const std::size_t d = model.dims();
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = model.log_density(points.subspan(i * d, d));
  }
}

void log_densities(const Density& model, std::span<const double> points, std::span<double> out,
                   Exec exec) {
  if (exec.serial()) {
    log_densities_serial(model, points, out);
  } else {
    log_densities_omp(model, points, out, exec.threads);
  }
}

void autocovariance_serial(const std::vector<std::vector<double>>& chains, double mean,
                           std::size_t lag_begin, std::span<double> out,
                           std::span<double> counts) {
  for (std::size_t j = 0; j < out.size(); ++j) {
    const std::size_t lag = lag_begin + j;
    double s = 0.0, c = 0.0;
    for (const auto& x : chains) {
      if (x.size() <= lag) continue;
      s += lag_sum(x, mean, lag);
      c += static_cast<double>(x.size() - lag);
    }
    out[j] = s;
    counts[j] = c;
  }
}

void autocovariance(const std::vector<std::vector<double>>& chains, double mean,
                    std::size_t lag_begin, std::span<double> out, std::span<double> counts,
                    Exec exec) {
  if (exec.serial()) {
    autocovariance_serial(chains, mean, lag_begin, out, counts);
  } else {
    autocovariance_omp(chains, mean, lag_begin, out, counts, exec.threads);
  }
}

}  // namespace baton::kernels
