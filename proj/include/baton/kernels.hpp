#pragma once

#include <functional>
#include <span>
#include <vector>

#include "baton/density.hpp"

// Data-parallel kernels. Each OpenMP kernel has a serial reference twin that
// computes bit-identical results; the dispatchers pick the serial path for a
// single thread. Reductions are never split across threads, so results do
// not depend on the thread count.
namespace baton::kernels {

struct Exec {
  int threads = 1;
  bool serial() const noexcept { return threads <= 1; }
};

/// Thread count from BATON_THREADS, else 1.
int default_threads();

using IndexFn = std::function<void(std::size_t)>;

void for_each_serial(std::size_t n, const IndexFn& fn);
/// Rethrows the exception of the lowest failing index after the loop.
void for_each_omp(std::size_t n, int threads, const IndexFn& fn);
void for_each(std::size_t n, Exec exec, const IndexFn& fn);

/// out[i] = log-density of row i of the row-major `points`.
void log_densities_serial(const Density& model, std::span<const double> points,
                          std::span<double> out);
void log_densities_omp(const Density& model, std::span<const double> points,
                       std::span<double> out, int threads);
void log_densities(const Density& model, std::span<const double> points, std::span<double> out,
                   Exec exec);

/// Pooled autocovariance sums for lags [lag_begin, lag_begin + out.size()):
/// out[j] = sum over chains c and i of (x_c[i]-mean)(x_c[i+lag]-mean), and
/// counts[j] = number of such pairs.
void autocovariance_serial(const std::vector<std::vector<double>>& chains, double mean,
                           std::size_t lag_begin, std::span<double> out,
                           std::span<double> counts);
void autocovariance_omp(const std::vector<std::vector<double>>& chains, double mean,
                        std::size_t lag_begin, std::span<double> out, std::span<double> counts,
                        int threads);
void autocovariance(const std::vector<std::vector<double>>& chains, double mean,
                    std::size_t lag_begin, std::span<double> out, std::span<double> counts,
                    Exec exec);

}  // namespace baton::kernels
