#pragma once

#include <filesystem>
#include <vector>

#include "json.hpp"

#include "baton/density.hpp"
#include "baton/evidence.hpp"
#include "baton/kernels.hpp"
#include "baton/rng.hpp"
#include "baton/sampling.hpp"

namespace baton::sb {

struct DetectorSpec {
  /// Exposure in years.
  double exposure = 1.0;
  double efficiency = 1.0;
  void validate() const;
};

/// Five detectors with exposures 1.6..0.4 yr and efficiencies 0.5..0.9.
std::vector<DetectorSpec> reference_detectors();

/// Energy window and signal line, in MeV.
struct Spectrum {
  double e_min = 0.0;
  double e_max = 0.2;
  double mu_s = 0.1;
  double sigma_s = 0.0025;
  void validate() const;
};

struct SbParams {
  /// Signal rate [1/yr].
  double s = 0.9375;
  /// Background decay constant [1/MeV].
  double lambda = 50.0;
  double m_b = 4.7;
  double sigma_b = 0.5;
  /// Per-detector background rates [1/yr]; drawn from the log-normal when empty.
  std::vector<double> b;
};

struct EventDataset {
  std::vector<std::vector<double>> energies;
  /// Generated signal events per detector (bookkeeping only; not used in fits).
  std::vector<std::size_t> signal_counts;
  std::size_t total() const noexcept;
};

enum class Model { sb, bkg };
const char* to_string(Model m) noexcept;

/// Background-rate draws B_i ~ LogNormal(log m_B - sigma_B^2 / 2, sigma_B),
/// then Poisson counts with means T_i B_i and T_i eps_i S. Background
/// energies follow the window-truncated exponential, signal energies the
/// line shape clipped to the window. Detector i uses stream rng/i.
EventDataset generate_sb_data(SbParams& truth, const std::vector<DetectorSpec>& detectors,
                              const RngNode& rng, const Spectrum& spectrum = {});

/// Window-normalised background shape lambda e^{-lambda (E - E_min)} / (1 - e^{-lambda W}).
double background_pdf(double e, double lambda, const Spectrum& spectrum);
/// Window-normalised Gaussian signal line.
double signal_pdf(double e, const Spectrum& spectrum);

/// Log-likelihood of one detector given its expected background and signal counts.
double detector_log_likelihood(std::span<const double> energies, double mu_b, double mu_s,
                               double lambda, const Spectrum& spectrum);
/// Sum over detectors. The BKG model ignores params.s.
double sb_log_likelihood(const SbParams& params, const EventDataset& data,
                         const std::vector<DetectorSpec>& detectors, Model model,
                         const Spectrum& spectrum = {});

/// Parameter layout: SB = [S, lambda, m_B, sigma_B, B_1..B_n],
/// BKG = [lambda, m_B, sigma_B, B_1..B_n].
SbParams unpack(std::span<const double> x, Model model);
std::size_t n_params(Model model, std::size_t n_detectors);

/// Uniform hyper-priors (S in [0,10], lambda in [0,100], m_B in [0,50],
/// sigma_B in [0.1,1]) with the log-normal background rates as a
/// hierarchical block.
DensityModel make_prior(Model model, std::size_t n_detectors);
DensityModel make_likelihood(Model model, EventDataset data, std::vector<DetectorSpec> detectors,
                             Spectrum spectrum = {});
DensityModel make_posterior(Model model, const EventDataset& data,
                            const std::vector<DetectorSpec>& detectors,
                            const Spectrum& spectrum = {});

struct ExampleOptions {
  SamplerConfig sampler;
  SbParams truth;
  Spectrum spectrum;
  std::vector<DetectorSpec> detectors = reference_detectors();
};

struct ExampleResult {
  EventDataset data;
  SbParams truth;
  SamplingResult sb;
  SamplingResult bkg;
  EvidenceResult z_sb;
  EvidenceResult z_bkg;
  BayesFactor bf;
  nlohmann::json report;
};

/// Generates data (stream seed/0), samples both posteriors (seed/1 and
/// seed/2), computes their evidences and the Bayes factor.
ExampleResult run_example(std::uint64_t seed, const ExampleOptions& options = {});

/// run_example plus data.csv, samples_sb.csv, samples_bkg.csv, report.json
/// and marginal histogram CSVs in out_dir.
ExampleResult run_example(std::uint64_t seed, const std::filesystem::path& out_dir,
                          const ExampleOptions& options = {});

}  // namespace baton::sb
