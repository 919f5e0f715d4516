#include <exception>
#include <vector>

#include <omp.h>

#include "baton/kernels.hpp"

namespace baton::kernels {

void for_each_omp(std::size_t n, int threads, const IndexFn& fn) {
  std::vector<std::exception_ptr> errors(n);
  const auto count = static_cast<long>(n);
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
  for (long i = 0; i < count; ++i) {
    try {
      fn(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

void log_densities_omp(const Density& model, std::span<const double> points,
                       std::span<double> out, int threads) {
  const std::size_t d = model.dims();
  const auto n = static_cast<long>(out.size());
  std::exception_ptr error;
#pragma omp parallel for schedule(static) num_threads(threads)
  for (long i = 0; i < n; ++i) {
    const auto row = static_cast<std::size_t>(i);
    try {
      out[row] = model.log_density(points.subspan(row * d, d));
    } catch (...) {
#pragma omp critical(baton_log_density_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
}

void autocovariance_omp(const std::vector<std::vector<double>>& chains, double mean,
                        std::size_t lag_begin, std::span<double> out, std::span<double> counts,
                        int threads) {
  const auto n_lags = static_cast<long>(out.size());
#pragma omp parallel for schedule(static) num_threads(threads)
  for (long j = 0; j < n_lags; ++j) {
    const std::size_t lag = lag_begin + static_cast<std::size_t>(j);
    double s = 0.0, c = 0.0;
    for (const auto& x : chains) {
      if (x.size() <= lag) continue;
      double chain_sum = 0.0;
      for (std::size_t i = 0; i + lag < x.size(); ++i) {
        chain_sum += (x[i] - mean) * (x[i + lag] - mean);
      }
      s += chain_sum;
      c += static_cast<double>(x.size() - lag);
    }
    out[static_cast<std::size_t>(j)] = s;
    counts[static_cast<std::size_t>(j)] = c;
  }
}

}  // namespace baton::kernels
