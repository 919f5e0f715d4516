#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "baton/density.hpp"
#include "baton/diagnostics.hpp"
#include "baton/hmc.hpp"
#include "baton/kernels.hpp"
#include "baton/mh.hpp"
#include "baton/rng.hpp"
#include "baton/sample_batch.hpp"

namespace baton {

enum class OnFailure { warn, error };
enum class SamplerKind { mh, hmc };

SamplerKind parse_sampler_kind(const std::string& name);
const char* to_string(SamplerKind kind) noexcept;

struct BurninConfig {
  std::size_t n_chains = 4;
  /// Samples per chain in the main run.
  std::size_t n_final_samples = 100000;
  double cycle_fraction = 0.1;
  std::size_t max_cycles = 30;
  double psrf_threshold = 1.1;
  OnFailure on_failure = OnFailure::warn;

  std::size_t cycle_steps() const;
  void validate() const;
};

struct HmcConfig {
  std::size_t n_leapfrog = 10;
  double target_accept = 0.8;
  double initial_step_size = 0.1;
  GradientMode gradient = GradientMode::automatic;
  double fd_step = 1e-6;
  /// A cycle counts as tuned when its mean acceptance probability is within
  /// this distance of target_accept.
  double accept_tolerance = 0.1;
};

struct SamplerConfig {
  SamplerKind kind = SamplerKind::mh;
  BurninConfig burnin;
  MhTunerConfig mh;
  HmcConfig hmc;
  kernels::Exec exec;
};

/// Reads the fields present in `j` (names as in the structs) over `base`.
SamplerConfig sampler_config_from_json(const nlohmann::json& j, SamplerConfig base = {});
/// Leaves out the thread count: it never changes results, so reports stay
/// byte-identical across thread counts.
nlohmann::json to_json(const SamplerConfig& cfg);

/// One chain's transition kernel plus its adaptation state.
class ChainSampler {
 public:
  virtual ~ChainSampler() = default;

  /// One transition drawing from `rng`; finished repetition groups go to `out`.
  virtual void step(RngNode& rng, SampleBatch* out) = 0;
  virtual void flush(SampleBatch& out) = 0;
  /// Adapts to the cycle just finished; returns whether the cycle was tuned.
  virtual bool end_cycle(const SampleBatch& cycle_samples) = 0;
  /// Stops adaptation and resets step bookkeeping for the main run.
  virtual void freeze() = 0;
  /// Flattened tuning parameters, for checking that they stay frozen.
  virtual std::vector<double> tuning() const = 0;
  virtual double acceptance_rate() const = 0;
  virtual const ChainState& state() const = 0;
};

std::unique_ptr<ChainSampler> make_chain_sampler(const DensityModel& target,
                                                 const SamplerConfig& cfg,
                                                 std::span<const double> start,
                                                 std::uint64_t chain_id);

/// Carries the last diagnostics when burn-in fails with on_failure = error.
class BurninFailure : public std::runtime_error {
 public:
  BurninFailure(const std::string& what, ConvergenceReport report)
      : std::runtime_error(what), report(std::move(report)) {}
  ConvergenceReport report;
};

struct BurninResult {
  std::vector<std::unique_ptr<ChainSampler>> chains;
  std::size_t cycles_used = 0;
  bool converged = false;
  bool tuned = false;
  ConvergenceReport report;
  std::vector<std::string> warnings;
};

/// Draws one starting point per chain from the target's prior (or the target
/// itself when it can be sampled exactly) using stream `rng`.
std::vector<std::vector<double>> initial_positions(const Density& target, std::size_t n_chains,
                                                   const RngNode& rng);

/// Cycles of ceil(cycle_fraction * n_final_samples) steps per chain, each
/// followed by adaptation and a convergence test, until every chain is tuned
/// and R-hat and multivariate R-hat are below the threshold, or max_cycles
/// is reached. Streams: rng/0/chain for starts, rng/1/chain/step for steps.
BurninResult run_burnin(const DensityModel& target, const SamplerConfig& cfg, const RngNode& rng);

struct SamplingResult {
  SampleBatch samples;
  std::size_t cycles_used = 0;
  bool converged = false;
  ConvergenceReport burnin_report;
  std::vector<double> acceptance_rates;
  std::vector<std::string> warnings;
};

/// Burn-in followed by n_final_samples steps per chain with tuning frozen
/// (streams rng/2/chain/step). Chains are concatenated in chain order.
SamplingResult sample_posterior(const DensityModel& target, const SamplerConfig& cfg,
                                const RngNode& rng);

}  // namespace baton
