#include "baton/sampling.hpp"

#include <algorithm>
#include <cmath>

#include "baton/error.hpp"

namespace baton {

SamplerKind parse_sampler_kind(const std::string& name) {
  if (name == "mh") return SamplerKind::mh;
  if (name == "hmc") return SamplerKind::hmc;
  throw ContractViolation("unknown sampler '" + name + "' (expected mh or hmc)");
}

const char* to_string(SamplerKind kind) noexcept {
  return kind == SamplerKind::mh ? "mh" : "hmc";
}

std::size_t BurninConfig::cycle_steps() const {
  return std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(cycle_fraction * static_cast<double>(n_final_samples))));
}

void BurninConfig::validate() const {
  if (n_chains < 2) throw ContractViolation("at least two chains are needed for convergence tests");
  if (!(cycle_fraction > 0.0 && cycle_fraction <= 1.0)) {
    throw ContractViolation("cycle_fraction must lie in (0, 1]");
  }
  if (n_final_samples < 1) throw ContractViolation("n_final_samples must be positive");
  if (!(psrf_threshold >= 1.0)) throw ContractViolation("psrf_threshold must be at least 1");
}

namespace {

GradientMode parse_gradient_mode(const std::string& s) {
  if (s == "auto" || s == "automatic") return GradientMode::automatic;
  if (s == "user") return GradientMode::user_supplied;
  if (s == "fd") return GradientMode::finite_difference;
  throw ContractViolation("unknown gradient mode '" + s + "' (expected auto, user or fd)");
}

const char* gradient_mode_name(GradientMode m) {
  switch (m) {
    case GradientMode::automatic: return "auto";
    case GradientMode::user_supplied: return "user";
    case GradientMode::finite_difference: return "fd";
  }
  return "?";
}

template <typename T>
void read(const nlohmann::json& j, const char* key, T& field) {
  if (j.contains(key)) field = j.at(key).get<T>();
}

class MhChain final : public ChainSampler {
 public:
  MhChain(DensityModel target, const MhTunerConfig& cfg, std::span<const double> start,
          std::uint64_t chain_id)
      : target_(std::move(target)), tuner_(TunerState::initial(*target_, cfg)) {
    state_.position.assign(start.begin(), start.end());
    state_.log_target = target_->log_density(start);
    state_.chain_id = chain_id;
  }

  void step(RngNode& rng, SampleBatch* out) override {
    mh_step(state_, *target_, tuner_, rng, out);
  }
  void flush(SampleBatch& out) override { state_.flush(out); }
  bool end_cycle(const SampleBatch& cycle) override {
    adapt_proposal(tuner_, cycle);
    return tuner_.tuned;
  }
  void freeze() override {
    state_.step_index = 0;
    state_.weight_pending = 0;
    state_.position_step = 0;
    tuner_.accepted = 0;
    tuner_.proposed = 0;
  }
  std::vector<double> tuning() const override {
    std::vector<double> t{tuner_.scale};
    t.insert(t.end(), tuner_.covariance.data(),
             tuner_.covariance.data() + tuner_.covariance.size());
    return t;
  }
  double acceptance_rate() const override { return tuner_.acceptance_rate(); }
  const ChainState& state() const override { return state_; }

 private:
  DensityModel target_;
  TunerState tuner_;
  ChainState state_;
};

class HmcChain final : public ChainSampler {
 public:
  HmcChain(DensityModel target, const HmcConfig& cfg, std::span<const double> start,
           std::uint64_t chain_id)
      : target_(std::move(target), cfg.gradient, cfg.fd_step),
        hyper_(HmcHyper::initial(start.size(), cfg.initial_step_size, cfg.n_leapfrog,
                                 cfg.target_accept)),
        tolerance_(cfg.accept_tolerance),
        state_(HmcChainState::start(target_, start, chain_id)),
        sum_(start.size(), 0.0),
        sum_sq_(start.size(), 0.0) {
    cycle_mass_ = hyper_.mass_diag;
    cycle_eps_ = hyper_.step_size;
  }

  void step(RngNode& rng, SampleBatch* out) override {
    const auto r = hmc_step(state_, target_, hyper_, rng, out);
    ++steps_;
    if (r.accepted) ++accepted_;
    if (frozen_) return;
    accept_sum_ += r.accept_prob;
    hyper_ = adapt_step_size(hyper_, r.accept_prob);
    for (std::size_t k = 0; k < state_.y.size(); ++k) {
      sum_[k] += state_.y[k];
      sum_sq_[k] += state_.y[k] * state_.y[k];
    }
  }
  void flush(SampleBatch& out) override { state_.chain.flush(out); }

  bool end_cycle(const SampleBatch&) override {
    const double n = static_cast<double>(steps_);
    const bool tuned = steps_ > 0 && std::abs(accept_sum_ / n - hyper_.target_accept) <= tolerance_;
    // The averaged step size belongs to the mass used during this cycle.
    cycle_mass_ = hyper_.mass_diag;
    cycle_eps_ = final_step_size(hyper_);
    if (steps_ > 1) {
      for (std::size_t k = 0; k < sum_.size(); ++k) {
        const double mean = sum_[k] / n;
        const double var = (sum_sq_[k] - n * mean * mean) / (n - 1.0);
        if (std::isfinite(var) && var > 0.0) hyper_.mass_diag[k] = std::clamp(1.0 / var, 1e-10, 1e10);
      }
    }
    hyper_.step_size = cycle_eps_;
    hyper_.dual_avg = DualAverage::start(cycle_eps_);
    reset_tally();
    return tuned;
  }

  void freeze() override {
    frozen_ = true;
    hyper_.mass_diag = cycle_mass_;
    hyper_.step_size = cycle_eps_;
    state_.chain.step_index = 0;
    state_.chain.weight_pending = 0;
    state_.chain.position_step = 0;
    reset_tally();
  }

  std::vector<double> tuning() const override {
    std::vector<double> t{hyper_.step_size};
    t.insert(t.end(), hyper_.mass_diag.begin(), hyper_.mass_diag.end());
    return t;
  }
  double acceptance_rate() const override {
    return steps_ == 0 ? 0.0 : static_cast<double>(accepted_) / static_cast<double>(steps_);
  }
  const ChainState& state() const override { return state_.chain; }

 private:
  void reset_tally() {
    steps_ = 0;
    accepted_ = 0;
    accept_sum_ = 0.0;
    std::fill(sum_.begin(), sum_.end(), 0.0);
    std::fill(sum_sq_.begin(), sum_sq_.end(), 0.0);
  }

  HmcTarget target_;
  HmcHyper hyper_;
  double tolerance_;
  HmcChainState state_;
  std::vector<double> sum_, sum_sq_;
  std::vector<double> cycle_mass_;
  double cycle_eps_ = 0.0;
  std::uint64_t steps_ = 0;
  std::uint64_t accepted_ = 0;
  double accept_sum_ = 0.0;
  bool frozen_ = false;
};

ConvergenceReport test_convergence(const std::vector<SampleBatch>& batches, double threshold,
                                   std::vector<std::string>* notes) {
  SampleBatch all(batches.front().dims());
  for (const auto& b : batches) all.append(b);
  try {
    return check_convergence(all, threshold);
  } catch (const std::exception& e) {
    // Degenerate cycles (constant chains, too few steps) count as not converged.
    if (notes) notes->push_back(e.what());
    ConvergenceReport r;
    r.threshold = threshold;
    return r;
  }
}

void run_chains(std::vector<std::unique_ptr<ChainSampler>>& chains, const RngNode& phase,
                std::size_t steps, std::vector<SampleBatch>& out, kernels::Exec exec) {
  kernels::for_each(chains.size(), exec, [&](std::size_t i) {
    const RngNode stream = phase.partition(i);
    auto& chain = *chains[i];
    for (std::size_t s = 0; s < steps; ++s) {
      RngNode step_rng = stream.partition(chain.state().step_index);
      chain.step(step_rng, &out[i]);
    }
    chain.flush(out[i]);
  });
}

}  // namespace

SamplerConfig sampler_config_from_json(const nlohmann::json& j, SamplerConfig cfg) {
  if (!j.is_object()) throw ContractViolation("sampler configuration must be a JSON object");
  if (j.contains("sampler")) cfg.kind = parse_sampler_kind(j.at("sampler").get<std::string>());
  auto& b = cfg.burnin;
  read(j, "n_chains", b.n_chains);
  read(j, "n_final_samples", b.n_final_samples);
  read(j, "cycle_fraction", b.cycle_fraction);
  read(j, "max_cycles", b.max_cycles);
  read(j, "psrf_threshold", b.psrf_threshold);
  if (j.contains("on_failure")) {
    const auto s = j.at("on_failure").get<std::string>();
    if (s == "warn") b.on_failure = OnFailure::warn;
    else if (s == "error") b.on_failure = OnFailure::error;
    else throw ContractViolation("on_failure must be warn or error");
  }
  read(j, "threads", cfg.exec.threads);
  if (j.contains("mh")) {
    const auto& m = j.at("mh");
    read(m, "alpha_min", cfg.mh.alpha_min);
    read(m, "alpha_max", cfg.mh.alpha_max);
    read(m, "c_min", cfg.mh.c_min);
    read(m, "c_max", cfg.mh.c_max);
    read(m, "beta", cfg.mh.beta);
    read(m, "nu", cfg.mh.nu);
  }
  if (j.contains("hmc")) {
    const auto& h = j.at("hmc");
    read(h, "n_leapfrog", cfg.hmc.n_leapfrog);
    read(h, "target_accept", cfg.hmc.target_accept);
    read(h, "initial_step_size", cfg.hmc.initial_step_size);
    read(h, "fd_step", cfg.hmc.fd_step);
    read(h, "accept_tolerance", cfg.hmc.accept_tolerance);
    if (h.contains("gradient")) cfg.hmc.gradient = parse_gradient_mode(h.at("gradient").get<std::string>());
  }
  return cfg;
}

nlohmann::json to_json(const SamplerConfig& cfg) {
  const auto& b = cfg.burnin;
  return {
      {"sampler", to_string(cfg.kind)},
      {"n_chains", b.n_chains},
      {"n_final_samples", b.n_final_samples},
      {"cycle_fraction", b.cycle_fraction},
      {"max_cycles", b.max_cycles},
      {"psrf_threshold", b.psrf_threshold},
      {"on_failure", b.on_failure == OnFailure::warn ? "warn" : "error"},
      {"mh",
       {{"alpha_min", cfg.mh.alpha_min},
        {"alpha_max", cfg.mh.alpha_max},
        {"c_min", cfg.mh.c_min},
        {"c_max", cfg.mh.c_max},
        {"beta", cfg.mh.beta},
        {"nu", cfg.mh.nu}}},
      {"hmc",
       {{"n_leapfrog", cfg.hmc.n_leapfrog},
        {"target_accept", cfg.hmc.target_accept},
        {"initial_step_size", cfg.hmc.initial_step_size},
        {"gradient", gradient_mode_name(cfg.hmc.gradient)},
        {"fd_step", cfg.hmc.fd_step},
        {"accept_tolerance", cfg.hmc.accept_tolerance}}},
  };
}

std::unique_ptr<ChainSampler> make_chain_sampler(const DensityModel& target,
                                                 const SamplerConfig& cfg,
                                                 std::span<const double> start,
                                                 std::uint64_t chain_id) {
  if (cfg.kind == SamplerKind::mh) return std::make_unique<MhChain>(target, cfg.mh, start, chain_id);
  return std::make_unique<HmcChain>(target, cfg.hmc, start, chain_id);
}

std::vector<std::vector<double>> initial_positions(const Density& target, std::size_t n_chains,
                                                   const RngNode& rng) {
  const Density* source = nullptr;
  if (target.prior() && target.prior()->iid_capable()) source = target.prior();
  else if (target.iid_capable()) source = &target;
  if (!source) {
    throw ContractViolation("initial positions need a prior (or target) that can be sampled exactly");
  }
  std::vector<std::vector<double>> starts;
  for (std::size_t c = 0; c < n_chains; ++c) {
    RngNode node = rng.partition(c);
    std::vector<double> x(target.dims());
    bool ok = false;
    for (int attempt = 0; attempt < 1000 && !ok; ++attempt) {
      source->sample_iid(node, x);
      ok = std::isfinite(target.log_density(x));
    }
    if (!ok) throw NumericalError("could not draw a starting point with finite target density");
    starts.push_back(std::move(x));
  }
  return starts;
}

BurninResult run_burnin(const DensityModel& target, const SamplerConfig& cfg, const RngNode& rng) {
  cfg.burnin.validate();
  cfg.mh.validate();
  const auto& bc = cfg.burnin;
  BurninResult res;
  const auto starts = initial_positions(*target, bc.n_chains, rng.partition(0));
  for (std::size_t c = 0; c < bc.n_chains; ++c) {
    res.chains.push_back(make_chain_sampler(target, cfg, starts[c], c));
  }
  res.report.threshold = bc.psrf_threshold;

  const RngNode phase = rng.partition(1);
  const std::size_t steps = bc.cycle_steps();
  for (std::size_t cycle = 0; cycle < bc.max_cycles; ++cycle) {
    std::vector<SampleBatch> batches(bc.n_chains, SampleBatch(target->dims()));
    run_chains(res.chains, phase, steps, batches, cfg.exec);

    std::vector<char> tuned(bc.n_chains, 0);
    kernels::for_each(bc.n_chains, cfg.exec,
                      [&](std::size_t i) { tuned[i] = res.chains[i]->end_cycle(batches[i]); });
    res.cycles_used = cycle + 1;
    res.tuned = std::all_of(tuned.begin(), tuned.end(), [](char t) { return t != 0; });
    res.report = test_convergence(batches, bc.psrf_threshold, nullptr);
    res.converged = res.report.converged;
    if (res.tuned && res.converged) return res;
  }

  std::string msg = "burn-in did not converge after " + std::to_string(res.cycles_used) +
                    " cycles (tuned: " + (res.tuned ? "yes" : "no") +
                    ", mpsrf: " + std::to_string(res.report.mpsrf) + ")";
  if (bc.on_failure == OnFailure::error) throw BurninFailure(msg, res.report);
  res.warnings.push_back(std::move(msg));
  return res;
}

SamplingResult sample_posterior(const DensityModel& target, const SamplerConfig& cfg,
                                const RngNode& rng) {
  BurninResult burn = run_burnin(target, cfg, rng);
  SamplingResult res;
  res.cycles_used = burn.cycles_used;
  res.converged = burn.converged && burn.tuned;
  res.burnin_report = burn.report;
  res.warnings = std::move(burn.warnings);

  for (auto& c : burn.chains) c->freeze();
  std::vector<SampleBatch> batches(burn.chains.size(), SampleBatch(target->dims()));
  run_chains(burn.chains, rng.partition(2), cfg.burnin.n_final_samples, batches, cfg.exec);

  res.samples = SampleBatch(target->dims());
  for (std::size_t c = 0; c < batches.size(); ++c) {
    res.samples.append(batches[c]);
    res.acceptance_rates.push_back(burn.chains[c]->acceptance_rate());
  }
  return res;
}

}  // namespace baton
