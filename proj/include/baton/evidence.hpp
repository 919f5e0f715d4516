#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "json.hpp"

#include "baton/density.hpp"
#include "baton/kernels.hpp"
#include "baton/rng.hpp"
#include "baton/sample_batch.hpp"

namespace baton {

/// Axis-aligned box in whitened coordinates w = L^-1 (x - mean). With the
/// identity whitening it is an ordinary box in parameter space.
struct HyperRectangle {
  std::vector<double> lower;
  std::vector<double> upper;
  Eigen::VectorXd mean;
  /// Lower-triangular factor L with covariance = L L^T.
  Eigen::MatrixXd factor;

  static HyperRectangle box(std::vector<double> lower, std::vector<double> upper);

  std::size_t dims() const noexcept { return lower.size(); }
  Eigen::VectorXd whiten(std::span<const double> x) const;
  bool contains(std::span<const double> x) const;
  /// log of the volume in parameter space.
  double log_volume() const;
  void validate() const;
};

enum class EvidenceMethod { harmonic_rect, mc_plain, mc_stratified };
const char* to_string(EvidenceMethod m) noexcept;

struct EvidenceResult {
  double z = 0.0;
  double sigma_z = 0.0;
  double log_z = 0.0;
  /// sigma_z / z, kept separately so it survives under- or overflow of z.
  double rel_sigma = 0.0;
  EvidenceMethod method = EvidenceMethod::harmonic_rect;
  std::optional<HyperRectangle> region;
  std::size_t n_used = 0;
};

nlohmann::json to_json(const EvidenceResult& r);

struct RegionOptions {
  double q_low = 0.2;
  double q_high = 0.8;
  /// Minimum share of the total weight inside the region.
  double min_weight_fraction = 0.05;
  /// Minimum Kish effective sample count inside the region.
  double min_effective = 100.0;
  std::size_t max_dims = 20;
};

/// Whitens the batch with its weighted mean and covariance and spans the
/// per-dimension [q_low, q_high] quantiles. The band is widened until the
/// minimum weight fraction is inside; the box is then shrunk about its
/// centre so that every corner lies in `support` (when given).
HyperRectangle choose_region(const SampleBatch& batch, const ParameterSpace* support = nullptr,
                             RegionOptions options = {});

/// Z = |r| / E, E = sum w 1_r(x) exp(-log f(x)) / sum w, using the batch's
/// recorded log-densities. sigma_Z from a 10-block jackknife over
/// contiguous blocks.
EvidenceResult harmonic_mean_integral(const SampleBatch& batch, const HyperRectangle& region,
                                      RegionOptions options = {});

/// choose_region followed by harmonic_mean_integral.
EvidenceResult harmonic_mean_evidence(const SampleBatch& batch, const ParameterSpace* support,
                                      RegionOptions options = {});

/// Monte Carlo integral of exp(log f) over a finite box. Stratified mode
/// uses ceil(n^(1/d)) cells per axis with one draw each (d <= 6). Draw i
/// (or cell i) uses stream rng/i.
EvidenceResult mc_cubature(const Density& target, const HyperRectangle& bounds, std::size_t n,
                           bool stratified, const RngNode& rng, kernels::Exec exec = {});

struct BayesFactor {
  double value = 0.0;
  double sigma = 0.0;
  double log_value = 0.0;
};

BayesFactor bayes_factor(const EvidenceResult& a, const EvidenceResult& b);

}  // namespace baton
