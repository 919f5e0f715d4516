#include "baton/evidence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Cholesky>

#include "baton/diagnostics.hpp"
#include "baton/error.hpp"
#include "baton/mh.hpp"

namespace baton {

namespace {

double kish(std::span<const double> w) {
  double s = 0.0, s2 = 0.0;
  for (double v : w) {
    s += v;
    s2 += v * v;
  }
  return s2 > 0.0 ? s * s / s2 : 0.0;
}

}  // namespace

HyperRectangle HyperRectangle::box(std::vector<double> lower, std::vector<double> upper) {
  HyperRectangle r;
  const auto d = static_cast<Eigen::Index>(lower.size());
  r.lower = std::move(lower);
  r.upper = std::move(upper);
  r.mean = Eigen::VectorXd::Zero(d);
  r.factor = Eigen::MatrixXd::Identity(d, d);
  r.validate();
  return r;
}

Eigen::VectorXd HyperRectangle::whiten(std::span<const double> x) const {
  const Eigen::Map<const Eigen::VectorXd> v(x.data(), static_cast<Eigen::Index>(x.size()));
  return factor.triangularView<Eigen::Lower>().solve(v - mean);
}

bool HyperRectangle::contains(std::span<const double> x) const {
  const Eigen::VectorXd w = whiten(x);
  for (std::size_t k = 0; k < dims(); ++k) {
    const double v = w(static_cast<Eigen::Index>(k));
    if (v < lower[k] || v > upper[k]) return false;
  }
  return true;
}

double HyperRectangle::log_volume() const {
  double lv = 0.0;
  for (std::size_t k = 0; k < dims(); ++k) {
    lv += std::log(upper[k] - lower[k]) +
          std::log(std::abs(factor(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k))));
  }
  return lv;
}

void HyperRectangle::validate() const {
  const auto d = static_cast<Eigen::Index>(lower.size());
  if (upper.size() != lower.size() || mean.size() != d || factor.rows() != d || factor.cols() != d) {
    throw ContractViolation("hyper-rectangle components have inconsistent sizes");
  }
  for (std::size_t k = 0; k < lower.size(); ++k) {
    if (!(std::isfinite(lower[k]) && std::isfinite(upper[k]) && lower[k] < upper[k])) {
      throw ContractViolation("hyper-rectangle needs finite bounds with lower < upper");
    }
  }
  if (!std::isfinite(log_volume())) throw ContractViolation("hyper-rectangle volume is not finite");
}

const char* to_string(EvidenceMethod m) noexcept {
  switch (m) {
    case EvidenceMethod::harmonic_rect: return "harmonic_rect";
    case EvidenceMethod::mc_plain: return "mc_plain";
    case EvidenceMethod::mc_stratified: return "mc_stratified";
  }
  return "?";
}

nlohmann::json to_json(const EvidenceResult& r) {
  nlohmann::json j{{"Z", r.z},
                   {"sigma_Z", r.sigma_z},
                   {"log_Z", r.log_z},
                   {"rel_sigma_Z", r.rel_sigma},
                   {"method", to_string(r.method)},
                   {"n_used", r.n_used}};
  if (r.region) {
    j["region"] = {{"lower", r.region->lower},
                   {"upper", r.region->upper},
                   {"log_volume", r.region->log_volume()}};
  }
  return j;
}

HyperRectangle choose_region(const SampleBatch& batch, const ParameterSpace* support,
                             RegionOptions options) {
  const std::size_t d = batch.dims();
  if (d > options.max_dims) {
    throw UnsupportedOperation("harmonic-mean evidence is limited to " +
                               std::to_string(options.max_dims) + " dimensions (got " +
                               std::to_string(d) + ")");
  }
  if (batch.empty() || kish(batch.weights()) < options.min_effective) {
    throw ContractViolation("evidence region needs at least " +
                            std::to_string(static_cast<int>(options.min_effective)) +
                            " effective samples");
  }
  if (support && support->dims() != d) throw ContractViolation("support dimension mismatch");

  HyperRectangle r;
  r.mean = weighted_mean(batch);
  const Eigen::MatrixXd cov = weighted_covariance(batch);
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success || !(cov.diagonal().array() > 0.0).all()) {
    throw NumericalError("sample covariance is singular; cannot whiten");
  }
  r.factor = llt.matrixL();

  const auto de = static_cast<Eigen::Index>(d);
  const std::size_t n = batch.size();
  std::vector<std::vector<double>> white(d, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::VectorXd w = r.whiten(batch.row(i));
    for (Eigen::Index k = 0; k < de; ++k) white[static_cast<std::size_t>(k)][i] = w(k);
  }
  const auto& wts = batch.weights();
  const double total = batch.total_weight();

  // Per-dimension sorted values with cumulative weights, so each quantile
  // is a binary search. Same convention as weighted_quantile.
  std::vector<std::vector<double>> sorted(d), cum(d);
  for (std::size_t k = 0; k < d; ++k) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return white[k][a] < white[k][b]; });
    sorted[k].reserve(n);
    cum[k].reserve(n);
    double c = 0.0;
    for (auto i : order) {
      c += wts[i];
      sorted[k].push_back(white[k][i]);
      cum[k].push_back(c);
    }
  }
  auto quantile = [&](std::size_t k, double q) {
    const auto it = std::lower_bound(cum[k].begin(), cum[k].end(), q * cum[k].back());
    return sorted[k][std::min<std::size_t>(static_cast<std::size_t>(it - cum[k].begin()), n - 1)];
  };

  auto interior = [&](std::vector<double>* inside_weights) {
    double in = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      bool ok = true;
      for (std::size_t k = 0; k < d && ok; ++k) {
        ok = white[k][i] >= r.lower[k] && white[k][i] <= r.upper[k];
      }
      if (ok) {
        in += wts[i];
        if (inside_weights) inside_weights->push_back(wts[i]);
      }
    }
    return in;
  };

  bool enough = false;
  for (double widen = 0.0; !enough; widen += 0.05) {
    const double ql = std::max(options.q_low - widen, 0.0);
    const double qh = std::min(options.q_high + widen, 1.0);
    r.lower.assign(d, 0.0);
    r.upper.assign(d, 0.0);
    bool proper = true;
    for (std::size_t k = 0; k < d; ++k) {
      r.lower[k] = quantile(k, ql);
      r.upper[k] = quantile(k, qh);
      proper = proper && r.lower[k] < r.upper[k];
    }
    enough = proper && interior(nullptr) >= options.min_weight_fraction * total;
    if (ql == 0.0 && qh == 1.0) break;
  }
  if (!enough) throw NumericalError("could not place an evidence region holding enough samples");

  if (support) {
    // Scale the box about its centre so that every corner maps into the support.
    Eigen::VectorXd c(de), h(de);
    for (Eigen::Index k = 0; k < de; ++k) {
      c(k) = 0.5 * (r.lower[static_cast<std::size_t>(k)] + r.upper[static_cast<std::size_t>(k)]);
      h(k) = 0.5 * (r.upper[static_cast<std::size_t>(k)] - r.lower[static_cast<std::size_t>(k)]);
    }
    const Eigen::VectorXd centre = r.mean + r.factor * c;
    const Eigen::VectorXd reach = r.factor.cwiseAbs() * h;
    double s = 1.0;
    for (Eigen::Index k = 0; k < de; ++k) {
      const double lo = support->lower[static_cast<std::size_t>(k)];
      const double hi = support->upper[static_cast<std::size_t>(k)];
      if (!(centre(k) > lo && centre(k) < hi)) {
        throw NumericalError("evidence region centre lies outside the support");
      }
      if (reach(k) <= 0.0) continue;
      s = std::min({s, (hi - centre(k)) / reach(k), (centre(k) - lo) / reach(k)});
    }
    if (s < 1.0) {
      s *= 1.0 - 1e-12;
      for (Eigen::Index k = 0; k < de; ++k) {
        r.lower[static_cast<std::size_t>(k)] = c(k) - s * h(k);
        r.upper[static_cast<std::size_t>(k)] = c(k) + s * h(k);
      }
    }
  }

  std::vector<double> inside;
  interior(&inside);
  if (kish(inside) < options.min_effective) {
    throw NumericalError("evidence region holds fewer than " +
                         std::to_string(static_cast<int>(options.min_effective)) +
                         " effective samples");
  }
  r.validate();
  return r;
}

EvidenceResult harmonic_mean_integral(const SampleBatch& batch, const HyperRectangle& region,
                                      RegionOptions options) {
  region.validate();
  if (region.dims() != batch.dims()) throw ContractViolation("region dimension mismatch");
  const std::size_t n = batch.size();
  constexpr std::size_t kBlocks = 10;
  std::vector<double> block_sum(kBlocks, 0.0), block_w(kBlocks, 0.0);
  std::vector<std::size_t> inside;
  const auto& w = batch.weights();
  const auto& lf = batch.log_densities();
  auto block_of = [&](std::size_t i) { return std::min(i * kBlocks / std::max<std::size_t>(n, 1), kBlocks - 1); };
  // Terms w exp(-log f) are summed linearly under one shift, the largest
  // exponent, so the sums cannot overflow.
  double shift = kNegInf;
  for (std::size_t i = 0; i < n; ++i) {
    block_w[block_of(i)] += w[i];
    if (!region.contains(batch.row(i))) continue;
    if (!std::isfinite(lf[i])) throw NumericalError("sample inside the region has no finite density");
    inside.push_back(i);
    shift = std::max(shift, -lf[i]);
  }
  if (inside.empty()) throw NumericalError("no sample weight inside the evidence region");
  std::vector<double> inside_w;
  inside_w.reserve(inside.size());
  for (auto i : inside) {
    block_sum[block_of(i)] += w[i] * std::exp(-lf[i] - shift);
    inside_w.push_back(w[i]);
  }
  if (kish(inside_w) < options.min_effective) {
    throw NumericalError("evidence region holds too few effective samples");
  }

  const double log_vol = region.log_volume();
  auto log_z = [&](std::size_t skip) {
    double sum = 0.0, wt = 0.0;
    for (std::size_t b = 0; b < kBlocks; ++b) {
      if (b == skip) continue;
      sum += block_sum[b];
      wt += block_w[b];
    }
    return log_vol - (shift + std::log(sum / wt));
  };

  EvidenceResult res;
  res.method = EvidenceMethod::harmonic_rect;
  res.region = region;
  res.n_used = inside_w.size();
  res.log_z = log_z(kBlocks);
  res.z = std::exp(res.log_z);

  if (n >= kBlocks) {
    std::vector<double> zs;
    for (std::size_t b = 0; b < kBlocks; ++b) {
      const double lz = log_z(b);
      if (!std::isfinite(lz)) throw NumericalError("jackknife block left no interior samples");
      zs.push_back(std::exp(lz - res.log_z));
    }
    double mean = 0.0;
    for (double z : zs) mean += z;
    mean /= kBlocks;
    double ss = 0.0;
    for (double z : zs) ss += (z - mean) * (z - mean);
    res.rel_sigma = std::sqrt(ss * (kBlocks - 1.0) / kBlocks);
    res.sigma_z = res.rel_sigma * res.z;
  }
  return res;
}

EvidenceResult harmonic_mean_evidence(const SampleBatch& batch, const ParameterSpace* support,
                                      RegionOptions options) {
  return harmonic_mean_integral(batch, choose_region(batch, support, options), options);
}

EvidenceResult mc_cubature(const Density& target, const HyperRectangle& bounds, std::size_t n,
                           bool stratified, const RngNode& rng, kernels::Exec exec) {
  for (std::size_t k = 0; k < bounds.lower.size(); ++k) {
    if (!std::isfinite(bounds.lower[k]) || !std::isfinite(bounds.upper[k])) {
      throw ContractViolation("Monte Carlo integration needs a finite box");
    }
  }
  bounds.validate();
  const std::size_t d = bounds.dims();
  if (d != target.dims()) throw ContractViolation("integration box dimension mismatch");
  if (n < 2) throw ContractViolation("Monte Carlo integration needs at least two draws");

  std::size_t per_axis = 1, cells = n;
  if (stratified) {
    if (d > 6) throw UnsupportedOperation("stratified integration is limited to 6 dimensions");
    per_axis = static_cast<std::size_t>(
        std::ceil(std::pow(static_cast<double>(n), 1.0 / static_cast<double>(d)) - 1e-9));
    per_axis = std::max<std::size_t>(per_axis, 1);
    cells = 1;
    for (std::size_t k = 0; k < d; ++k) cells *= per_axis;
    if (cells > 100000000) throw ContractViolation("stratified grid too large");
  }

  std::vector<double> logf(cells);
  kernels::for_each(cells, exec, [&](std::size_t i) {
    RngNode node = rng.partition(i);
    Eigen::VectorXd w(static_cast<Eigen::Index>(d));
    std::size_t rest = i;
    for (std::size_t k = 0; k < d; ++k) {
      const double u = node.uniform();
      const double width = bounds.upper[k] - bounds.lower[k];
      double pos = u;
      if (stratified) {
        pos = (static_cast<double>(rest % per_axis) + u) / static_cast<double>(per_axis);
        rest /= per_axis;
      }
      w(static_cast<Eigen::Index>(k)) = bounds.lower[k] + pos * width;
    }
    const Eigen::VectorXd x = bounds.mean + bounds.factor * w;
    logf[i] = target.log_density(std::span<const double>(x.data(), d));
  });

  const double shift = *std::max_element(logf.begin(), logf.end());
  EvidenceResult res;
  res.method = stratified ? EvidenceMethod::mc_stratified : EvidenceMethod::mc_plain;
  res.n_used = cells;
  if (shift == kNegInf) {
    res.log_z = kNegInf;
    return res;
  }
  std::vector<double> f(cells);
  double sum = 0.0;
  for (std::size_t i = 0; i < cells; ++i) {
    f[i] = std::exp(logf[i] - shift);
    sum += f[i];
  }
  const double log_cell = bounds.log_volume() - std::log(static_cast<double>(cells));
  res.log_z = std::log(sum) + shift + log_cell;
  res.z = std::exp(res.log_z);

  double var = 0.0;
  if (stratified) {
    // Adjacent cells form pairs; a trailing odd cell pairs with its predecessor.
    for (std::size_t i = 0; i + 1 < cells; i += 2) var += (f[i] - f[i + 1]) * (f[i] - f[i + 1]);
    if (cells % 2 == 1 && cells > 1) {
      var += (f[cells - 1] - f[cells - 2]) * (f[cells - 1] - f[cells - 2]);
    }
  } else {
    const double mean = sum / static_cast<double>(cells);
    double ss = 0.0;
    for (double v : f) ss += (v - mean) * (v - mean);
    var = cells * ss / (static_cast<double>(cells) - 1.0);
  }
  res.rel_sigma = std::sqrt(var) / sum;
  res.sigma_z = res.rel_sigma * res.z;
  return res;
}

BayesFactor bayes_factor(const EvidenceResult& a, const EvidenceResult& b) {
  if (!std::isfinite(a.log_z) || !std::isfinite(b.log_z)) {
    throw ContractViolation("Bayes factor needs positive, finite evidences");
  }
  BayesFactor bf;
  bf.log_value = a.log_z - b.log_z;
  bf.value = std::exp(bf.log_value);
  bf.sigma = bf.value * std::hypot(a.rel_sigma, b.rel_sigma);
  return bf;
}

}  // namespace baton
