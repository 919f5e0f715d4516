#pragma once

#include <cstdint>
#include <vector>

#include "baton/sample_batch.hpp"

namespace baton {

/// Current position of one Markov chain plus its pending repetition count.
///
/// A position is written to the output only once the chain leaves it (or on
/// flush), with weight equal to the number of steps it was held. The sum of
/// emitted weights therefore equals the number of steps taken.
struct ChainState {
  std::vector<double> position;
  double log_target = 0.0;
  std::uint64_t weight_pending = 0;
  std::uint64_t step_index = 0;
  std::uint64_t chain_id = 0;
  /// Step at which the current position was first reached.
  std::uint64_t position_step = 0;

  /// Applies the outcome of one transition.
  void advance(bool accepted, std::span<const double> proposal, double proposal_log_target,
               SampleBatch* out);
  /// Emits the pending position and resets its weight to zero. A position
  /// held past the flush is re-emitted later with the next step index.
  void flush(SampleBatch& out);
};

}  // namespace baton
