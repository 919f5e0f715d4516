#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>

#include <unsupported/Eigen/FFT>

#include "baton/diagnostics.hpp"
#include "baton/error.hpp"

namespace baton {

namespace {

constexpr std::size_t kLagBlock = 64;
// Beyond this many lags the remaining ones come from one FFT per chain.
constexpr std::size_t kDirectLags = 256;
constexpr double kSokalWindow = 5.0;

// Normalized autocorrelation of pooled chains, filled in blocks of lags on demand.
class LazyAutocorrelation {
 public:
  LazyAutocorrelation(const std::vector<std::vector<double>>& chains, kernels::Exec exec)
      : chains_(chains), exec_(exec) {
    double sum = 0.0, n = 0.0;
    std::size_t longest = 0;
    for (const auto& c : chains_) {
      for (double v : c) sum += v;
      n += static_cast<double>(c.size());
      longest = std::max(longest, c.size());
    }
    mean_ = sum / n;
    max_lag_ = longest == 0 ? 0 : longest - 1;
    fill_to(0);
    c0_ = cov_[0];
  }

  std::size_t max_lag() const noexcept { return max_lag_; }
  bool constant() const noexcept { return !(c0_ > 0.0); }

  double rho(std::size_t lag) {
    fill_to(lag);
    return cov_[lag] / c0_;
  }

 private:
  void fill_to(std::size_t lag) {
    if (lag >= kDirectLags && cov_.size() <= lag) {
      fill_by_fft();
      return;
    }
    while (cov_.size() <= lag) {
      const std::size_t begin = cov_.size();
      const std::size_t count = std::min(kLagBlock, max_lag_ + 1 - begin);
      std::vector<double> sums(count), pairs(count);
      kernels::autocovariance(chains_, mean_, begin, sums, pairs, exec_);
      for (std::size_t j = 0; j < count; ++j) cov_.push_back(sums[j] / pairs[j]);
    }
  }

  void fill_by_fft() {
    const std::size_t begin = cov_.size();
    std::vector<double> sums(max_lag_ + 1, 0.0), pairs(max_lag_ + 1, 0.0);
    Eigen::FFT<double> fft;
    for (const auto& c : chains_) {
      if (c.size() <= begin) continue;
      std::size_t len = 1;
      while (len < 2 * c.size()) len <<= 1;
      std::vector<double> x(len, 0.0);
      for (std::size_t i = 0; i < c.size(); ++i) x[i] = c[i] - mean_;
      std::vector<std::complex<double>> f;
      fft.fwd(f, x);
      for (auto& v : f) v = std::norm(v);
      std::vector<double> r;
      fft.inv(r, f);
      for (std::size_t lag = begin; lag < c.size(); ++lag) {
        sums[lag] += r[lag];
        pairs[lag] += static_cast<double>(c.size() - lag);
      }
    }
    for (std::size_t lag = begin; lag <= max_lag_; ++lag) cov_.push_back(sums[lag] / pairs[lag]);
  }

  const std::vector<std::vector<double>>& chains_;
  kernels::Exec exec_;
  double mean_ = 0.0;
  double c0_ = 0.0;
  std::size_t max_lag_ = 0;
  std::vector<double> cov_;
};

double geyer_tau(LazyAutocorrelation& ac) {
  double sum = 0.0;
  double previous = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; 2 * t + 1 <= ac.max_lag(); ++t) {
    double pair = ac.rho(2 * t) + ac.rho(2 * t + 1);
    if (!(pair > 0.0)) break;
    pair = std::min(pair, previous);
    sum += pair;
    previous = pair;
  }
  return 2.0 * sum - 1.0;
}

double sokal_tau(LazyAutocorrelation& ac) {
  double tau = 1.0;
  for (std::size_t lag = 1; lag <= ac.max_lag(); ++lag) {
    tau += 2.0 * ac.rho(lag);
    if (static_cast<double>(lag) >= kSokalWindow * tau) break;
  }
  return tau;
}

}  // namespace

double autocovariance(std::span<const double> x, std::size_t lag) {
  if (lag >= x.size()) throw ContractViolation("autocovariance lag must be below the series length");
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  double s = 0.0;
  for (std::size_t i = 0; i + lag < x.size(); ++i) s += (x[i] - mean) * (x[i + lag] - mean);
  return s / static_cast<double>(x.size() - lag);
}

double integrated_autocorr_time(const std::vector<std::vector<double>>& chains, IatMethod method,
                                kernels::Exec exec) {
  std::size_t n = 0;
  for (const auto& c : chains) n += c.size();
  if (n < 10) throw ContractViolation("autocorrelation time needs at least 10 samples");
  LazyAutocorrelation ac(chains, exec);
  if (ac.constant()) return 1.0;
  const double tau = method == IatMethod::geyer ? geyer_tau(ac) : sokal_tau(ac);
  return std::max(tau, 1.0);
}

double integrated_autocorr_time(std::span<const double> x, IatMethod method) {
  return integrated_autocorr_time(std::vector<std::vector<double>>{{x.begin(), x.end()}}, method);
}

std::vector<double> ess(const SampleBatch& batch, IatMethod method, kernels::Exec exec) {
  if (batch.empty()) throw ContractViolation("effective sample size of an empty batch");
  const double total = batch.total_weight();
  std::vector<double> out(batch.dims(), total);
  if (total < 10.0) return out;
  const auto chains = split_chains(batch);
  for (std::size_t k = 0; k < batch.dims(); ++k) {
    std::vector<std::vector<double>> series;
    series.reserve(chains.size());
    for (const auto& c : chains) {
      const auto col = c.col(static_cast<Eigen::Index>(k));
      series.emplace_back(col.data(), col.data() + col.size());
    }
    out[k] = total / integrated_autocorr_time(series, method, exec);
  }
  return out;
}

}  // namespace baton
