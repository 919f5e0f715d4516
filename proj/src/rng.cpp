#include "baton/rng.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace baton {

namespace {

constexpr std::uint64_t kRootKeyTag = 0x62617465'6e726e67ULL;  // "batenrng"
constexpr std::uint64_t kDeriveCursor = std::numeric_limits<std::uint64_t>::max();

inline double to_unit(std::uint64_t word) noexcept {
  return static_cast<double>(word >> 11) * 0x1.0p-53;
}

}  // namespace

RngNode RngNode::root(std::uint64_t seed) noexcept {
  RngNode node;
  node.key_ = {seed, kRootKeyTag};
  return node;
}

RngNode RngNode::partition(std::uint64_t index) const {
  if (index >= kMaxFanOut) {
    throw RngError("rng partition index exceeds fan-out limit 2^32");
  }
  RngNode child = *this;
  child.cursor_ = 0;
  child.depth_ = depth_ + 1;
  if (used_lanes_ == kLanes) {
    const PhiloxCounter folded =
        philox4x64_10({lanes_[0], lanes_[1], lanes_[2], kDeriveCursor}, key_);
    child.key_ = {folded[0], folded[1]};
    child.lanes_ = {index + 1, 0, 0};
    child.used_lanes_ = 1;
    return child;
  }
  child.lanes_[static_cast<std::size_t>(used_lanes_)] = index + 1;
  child.used_lanes_ = used_lanes_ + 1;
  return child;
}

PhiloxCounter RngNode::next_block() {
  if (cursor_ >= kDeriveCursor - 1) {
    throw RngError("rng counter space exhausted");
  }
  const PhiloxCounter out = philox4x64_10(counter(), key_);
  ++cursor_;
  return out;
}

double RngNode::uniform() { return to_unit(next_block()[0]); }

double RngNode::uniform_pos() {
  return static_cast<double>((next_block()[0] >> 11) + 1) * 0x1.0p-53;
}

double RngNode::normal() {
  const PhiloxCounter b = next_block();
  const double u1 = static_cast<double>((b[0] >> 11) + 1) * 0x1.0p-53;
  const double u2 = to_unit(b[1]);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double RngNode::exponential() { return -std::log(uniform_pos()); }

double RngNode::gamma(double shape) {
  if (!(shape > 0.0)) throw std::invalid_argument("gamma shape must be positive");
  if (shape < 1.0) {
    // Boost to shape + 1 and rescale by U^(1/shape).
    const double g = gamma(shape + 1.0);
    return g * std::pow(uniform_pos(), 1.0 / shape);
  }
  // Marsaglia & Tsang (2000).
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    const double x = normal();
    double v = 1.0 + c * x;
    if (v <= 0.0) continue;
    v = v * v * v;
    const double u = uniform_pos();
    if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) return d * v;
  }
}

double RngNode::chi_square(double dof) { return 2.0 * gamma(0.5 * dof); }

double RngNode::lognormal(double mu, double sigma) {
  return std::exp(mu + sigma * normal());
}

double RngNode::cauchy(double location, double scale) {
  return location + scale * std::tan(std::numbers::pi * (uniform() - 0.5));
}

std::uint64_t RngNode::poisson(double mean) {
  if (!(mean >= 0.0)) throw std::invalid_argument("poisson mean must be non-negative");
  if (mean == 0.0) return 0;
  if (mean < 30.0) {
    const double limit = std::exp(-mean);
    std::uint64_t k = 0;
    double prod = uniform_pos();
    while (prod > limit) {
      ++k;
      prod *= uniform_pos();
    }
    return k;
  }
  // Hörmann's PTRS transformed rejection.
  const double slam = std::sqrt(mean);
  const double loglam = std::log(mean);
  const double b = 0.931 + 2.53 * slam;
  const double a = -0.059 + 0.02483 * b;
  const double invalpha = 1.1239 + 1.1328 / (b - 3.4);
  const double vr = 0.9277 - 3.6224 / (b - 2.0);
  for (;;) {
    const double u = uniform() - 0.5;
    const double v = uniform();
    const double us = 0.5 - std::abs(u);
    const double k = std::floor((2.0 * a / us + b) * u + mean + 0.43);
    if (us >= 0.07 && v <= vr) return static_cast<std::uint64_t>(k);
    if (k < 0.0 || (us < 0.013 && v > us)) continue;
    if (std::log(v) + std::log(invalpha) - std::log(a / (us * us) + b) <=
        -mean + k * loglam - std::lgamma(k + 1.0)) {
      return static_cast<std::uint64_t>(k);
    }
  }
}

}  // namespace baton
