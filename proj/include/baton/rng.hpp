#pragma once

#include <cstdint>
#include <stdexcept>

#include "baton/philox.hpp"

namespace baton {

class RngError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A keyed Philox stream that can be split into independent children.
///
/// The 256-bit counter is laid out as three partition lanes followed by a
/// draw cursor. Partitioning fills the next free lane with `index + 1`, so
/// distinct paths of depth <= 3 map to distinct counter prefixes under the
/// same key. A fourth level folds the current prefix into a fresh key
/// (derived through the block function itself, at a cursor value that is
/// never used for draws) and starts over with empty lanes.
///
/// Every draw consumes one full block and advances the cursor by one.
/// Nodes are plain values: copy one to replay a stream, never share one
/// between threads.
class RngNode {
 public:
  static constexpr std::uint64_t kMaxFanOut = std::uint64_t{1} << 32;
  static constexpr int kLanes = 3;

  static RngNode root(std::uint64_t seed) noexcept;

  /// Child stream `index` of this node. Throws RngError when index >= 2^32.
  [[nodiscard]] RngNode partition(std::uint64_t index) const;

  PhiloxCounter next_block();

  /// Uniform on [0, 1) with 53-bit resolution.
  double uniform();
  /// Uniform on (0, 1].
  double uniform_pos();
  double normal();
  double exponential();
  double gamma(double shape);
  double chi_square(double dof);
  double lognormal(double mu, double sigma);
  double cauchy(double location, double scale);
  std::uint64_t poisson(double mean);

  const PhiloxKey& key() const noexcept { return key_; }
  /// Counter lanes 0..2; lane 3 is the cursor.
  PhiloxCounter counter() const noexcept {
    return {lanes_[0], lanes_[1], lanes_[2], cursor_};
  }
  std::uint64_t cursor() const noexcept { return cursor_; }
  /// Number of partition steps taken from the root, including folded ones.
  int depth() const noexcept { return depth_; }
  /// Lanes currently occupied under the present key.
  int used_lanes() const noexcept { return used_lanes_; }

  friend bool operator==(const RngNode&, const RngNode&) = default;

 private:
  RngNode() = default;

  PhiloxKey key_{};
  std::array<std::uint64_t, kLanes> lanes_{};
  std::uint64_t cursor_ = 0;
  int used_lanes_ = 0;
  int depth_ = 0;
};

inline RngNode root_rng(std::uint64_t seed) noexcept { return RngNode::root(seed); }
inline RngNode partition(const RngNode& node, std::uint64_t index) {
  return node.partition(index);
}
inline double draw_uniform(RngNode& node) { return node.uniform(); }

}  // namespace baton
