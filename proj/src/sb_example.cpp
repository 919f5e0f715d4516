#include "baton/sb_example.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "baton/diagnostics.hpp"
#include "baton/error.hpp"
#include "baton/io.hpp"
#include "baton/optimize.hpp"

namespace baton::sb {

namespace {

double lognormal_logpdf(double x, double mu, double sigma) {
  if (!(x > 0.0)) return kNegInf;
  const double lx = std::log(x);
  const double z = (lx - mu) / sigma;
  return -0.5 * z * z - lx - std::log(sigma) - 0.5 * std::log(2.0 * std::numbers::pi);
}

double lognormal_mu(double m_b, double sigma_b) { return std::log(m_b) - 0.5 * sigma_b * sigma_b; }

std::vector<std::string> param_names(Model model, std::size_t n) {
  std::vector<std::string> names;
  if (model == Model::sb) names.push_back("S");
  for (const char* s : {"lambda", "m_B", "sigma_B"}) names.emplace_back(s);
  for (std::size_t i = 0; i < n; ++i) names.push_back("B_" + std::to_string(i + 1));
  return names;
}

std::size_t hyper_count(Model model) { return model == Model::sb ? 4 : 3; }

}  // namespace

void DetectorSpec::validate() const {
  if (!(exposure > 0.0) || !std::isfinite(exposure)) throw ContractViolation("detector exposure must be positive");
  if (!(efficiency > 0.0 && efficiency <= 1.0)) {
    throw ContractViolation("detector efficiency must lie in (0, 1]");
  }
}

std::vector<DetectorSpec> reference_detectors() {
  return {{1.6, 0.5}, {1.3, 0.6}, {1.0, 0.7}, {0.7, 0.8}, {0.4, 0.9}};
}

void Spectrum::validate() const {
  if (!(e_min < e_max) || !std::isfinite(e_min) || !std::isfinite(e_max)) {
    throw ContractViolation("energy window needs finite e_min < e_max");
  }
  if (!(sigma_s > 0.0)) throw ContractViolation("signal width must be positive");
}

std::size_t EventDataset::total() const noexcept {
  std::size_t n = 0;
  for (const auto& e : energies) n += e.size();
  return n;
}

const char* to_string(Model m) noexcept { return m == Model::sb ? "sb" : "bkg"; }

double background_pdf(double e, double lambda, const Spectrum& spectrum) {
  const double width = spectrum.e_max - spectrum.e_min;
  if (e < spectrum.e_min || e > spectrum.e_max) return 0.0;
  if (std::abs(lambda * width) < 1e-10) return 1.0 / width;
  return lambda * std::exp(-lambda * (e - spectrum.e_min)) / -std::expm1(-lambda * width);
}

double signal_pdf(double e, const Spectrum& spectrum) {
  if (e < spectrum.e_min || e > spectrum.e_max) return 0.0;
  const double s = spectrum.sigma_s;
  const double z = (e - spectrum.mu_s) / s;
  const double mass = 0.5 * (std::erfc(-(spectrum.e_max - spectrum.mu_s) / (s * std::numbers::sqrt2)) -
                             std::erfc(-(spectrum.e_min - spectrum.mu_s) / (s * std::numbers::sqrt2)));
  return std::exp(-0.5 * z * z) / (s * std::sqrt(2.0 * std::numbers::pi) * mass);
}

EventDataset generate_sb_data(SbParams& truth, const std::vector<DetectorSpec>& detectors,
                              const RngNode& rng, const Spectrum& spectrum) {
  spectrum.validate();
  if (!(truth.s >= 0.0) || !(truth.lambda > 0.0) || !(truth.m_b > 0.0) || !(truth.sigma_b > 0.0)) {
    throw ContractViolation("SB parameters need S >= 0 and positive lambda, m_B, sigma_B");
  }
  if (!truth.b.empty() && truth.b.size() != detectors.size()) {
    throw ContractViolation("one background rate per detector is needed");
  }
  const bool draw_b = truth.b.empty();
  if (draw_b) truth.b.resize(detectors.size());
  const double width = spectrum.e_max - spectrum.e_min;
  const double tail = -std::expm1(-truth.lambda * width);

  EventDataset data;
  data.energies.resize(detectors.size());
  data.signal_counts.resize(detectors.size());
  for (std::size_t i = 0; i < detectors.size(); ++i) {
    const auto& det = detectors[i];
    det.validate();
    RngNode node = rng.partition(i);
    if (draw_b) truth.b[i] = node.lognormal(lognormal_mu(truth.m_b, truth.sigma_b), truth.sigma_b);
    const std::uint64_t n_b = node.poisson(det.exposure * truth.b[i]);
    const std::uint64_t n_s = node.poisson(det.exposure * det.efficiency * truth.s);
    auto& e = data.energies[i];
    data.signal_counts[i] = n_s;
    for (std::uint64_t j = 0; j < n_b; ++j) {
      e.push_back(spectrum.e_min - std::log1p(-node.uniform() * tail) / truth.lambda);
    }
    for (std::uint64_t j = 0; j < n_s; ++j) {
      e.push_back(std::clamp(spectrum.mu_s + spectrum.sigma_s * node.normal(), spectrum.e_min,
                             spectrum.e_max));
    }
    std::sort(e.begin(), e.end());
  }
  return data;
}

double detector_log_likelihood(std::span<const double> energies, double mu_b, double mu_s,
                               double lambda, const Spectrum& spectrum) {
  const double mu = mu_b + mu_s;
  const auto n = static_cast<double>(energies.size());
  if (!(mu > 0.0)) return energies.empty() ? 0.0 : kNegInf;
  double ll = -mu - std::lgamma(n + 1.0);
  // Summing in sorted order makes the result independent of event order.
  std::vector<double> sorted(energies.begin(), energies.end());
  std::sort(sorted.begin(), sorted.end());
  for (double e : sorted) {
    ll += std::log(mu_b * background_pdf(e, lambda, spectrum) + mu_s * signal_pdf(e, spectrum));
  }
  return ll;
}

double sb_log_likelihood(const SbParams& params, const EventDataset& data,
                         const std::vector<DetectorSpec>& detectors, Model model,
                         const Spectrum& spectrum) {
  if (data.energies.size() != detectors.size() || params.b.size() != detectors.size()) {
    throw ContractViolation("data, detectors and background rates must agree in length");
  }
  const double s = model == Model::sb ? params.s : 0.0;
  double ll = 0.0;
  for (std::size_t i = 0; i < detectors.size(); ++i) {
    const auto& d = detectors[i];
    ll += detector_log_likelihood(data.energies[i], d.exposure * params.b[i],
                                  d.exposure * d.efficiency * s, params.lambda, spectrum);
  }
  return ll;
}

SbParams unpack(std::span<const double> x, Model model) {
  const std::size_t h = hyper_count(model);
  if (x.size() < h) throw ContractViolation("parameter vector too short");
  SbParams p;
  std::size_t i = 0;
  p.s = model == Model::sb ? x[i++] : 0.0;
  p.lambda = x[i++];
  p.m_b = x[i++];
  p.sigma_b = x[i++];
  p.b.assign(x.begin() + static_cast<std::ptrdiff_t>(h), x.end());
  return p;
}

std::size_t n_params(Model model, std::size_t n_detectors) {
  return hyper_count(model) + n_detectors;
}

DensityModel make_prior(Model model, std::size_t n_detectors) {
  const auto names = param_names(model, n_detectors);
  std::vector<double> lo, hi;
  if (model == Model::sb) {
    lo.push_back(0.0);
    hi.push_back(10.0);
  }
  lo.insert(lo.end(), {0.0, 0.0, 0.1});
  hi.insert(hi.end(), {100.0, 50.0, 1.0});
  const std::size_t h = hyper_count(model);
  auto hyper = make_uniform_prior(lo, hi, std::vector<std::string>(names.begin(), names.begin() + static_cast<std::ptrdiff_t>(h)));

  ParameterSpace rates = ParameterSpace::box(std::vector<double>(n_detectors, 0.0),
                                             std::vector<double>(n_detectors, kInf),
                                             std::vector<std::string>(names.begin() + static_cast<std::ptrdiff_t>(h), names.end()));
  HierarchicalPriorSpec spec;
  spec.hyper_prior = hyper;
  spec.conditional_space = rates;
  spec.conditional = [rates, h](std::span<const double> hyper_values) -> DensityModel {
    const double m_b = hyper_values[h - 2];
    const double sigma_b = hyper_values[h - 1];
    if (!(m_b > 0.0) || !(sigma_b > 0.0)) return nullptr;
    const double mu = lognormal_mu(m_b, sigma_b);
    FunctionDensitySpec f;
    f.space = rates;
    f.role = DensityRole::prior;
    f.log_density = [mu, sigma_b](std::span<const double> b) {
      double lp = 0.0;
      for (double v : b) lp += lognormal_logpdf(v, mu, sigma_b);
      return lp;
    };
    f.sample_iid = [mu, sigma_b](RngNode& rng, std::span<double> out) {
      for (auto& v : out) v = rng.lognormal(mu, sigma_b);
    };
    return make_function_density(std::move(f));
  };
  return make_hierarchical_prior(std::move(spec));
}

DensityModel make_likelihood(Model model, EventDataset data, std::vector<DetectorSpec> detectors,
                             Spectrum spectrum) {
  spectrum.validate();
  if (data.energies.size() != detectors.size()) {
    throw ContractViolation("one event list per detector is needed");
  }
  for (const auto& d : detectors) d.validate();
  for (const auto& e : data.energies) {
    for (double v : e) {
      if (v < spectrum.e_min || v > spectrum.e_max) throw ContractViolation("event energy outside the window");
    }
  }
  for (auto& e : data.energies) std::sort(e.begin(), e.end());
  // The signal shape does not depend on the parameters.
  std::vector<std::vector<double>> p_signal(data.energies.size());
  for (std::size_t i = 0; i < data.energies.size(); ++i) {
    for (double e : data.energies[i]) p_signal[i].push_back(signal_pdf(e, spectrum));
  }
  FunctionDensitySpec f;
  f.space = make_prior(model, detectors.size())->space();
  f.role = DensityRole::likelihood;
  f.differentiable = false;
  f.log_density = [model, data = std::move(data), detectors = std::move(detectors), spectrum,
                   p_signal = std::move(p_signal)](std::span<const double> x) {
    const SbParams p = unpack(x, model);
    double ll = 0.0;
    for (std::size_t i = 0; i < detectors.size(); ++i) {
      const double mu_b = detectors[i].exposure * p.b[i];
      const double mu_s = detectors[i].exposure * detectors[i].efficiency * p.s;
      const auto& ev = data.energies[i];
      const double mu = mu_b + mu_s;
      if (!(mu > 0.0)) {
        if (!ev.empty()) return kNegInf;
        continue;
      }
      ll += -mu - std::lgamma(static_cast<double>(ev.size()) + 1.0);
      for (std::size_t j = 0; j < ev.size(); ++j) {
        ll += std::log(mu_b * background_pdf(ev[j], p.lambda, spectrum) + mu_s * p_signal[i][j]);
      }
    }
    return ll;
  };
  return make_function_density(std::move(f));
}

DensityModel make_posterior(Model model, const EventDataset& data,
                            const std::vector<DetectorSpec>& detectors, const Spectrum& spectrum) {
  return build_posterior(make_likelihood(model, data, detectors, spectrum),
                         make_prior(model, detectors.size()));
}

namespace {

nlohmann::json model_report(const DensityModel& posterior, const SamplingResult& run,
                            const EvidenceResult& z, Model model, std::size_t n_det) {
  const auto names = param_names(model, n_det);
  const auto& batch = run.samples;
  nlohmann::json params = nlohmann::json::object();
  const auto best = batch.row(batch.argmax_log_density());
  const auto mode = refine_mode(*posterior, best);
  for (std::size_t k = 0; k < names.size(); ++k) {
    const auto pe = point_estimates(batch, k);
    params[names[k]] = {{"mean", pe.mean},
                        {"median", pe.median},
                        {"std", pe.std},
                        {"quantiles", {{"0.16", pe.quantiles[0]}, {"0.5", pe.quantiles[1]}, {"0.84", pe.quantiles[2]}}},
                        {"marginal_mode", marginal_mode(batch, k)},
                        {"global_mode", mode[k]}};
  }
  return {{"parameters", params},
          {"converged", run.converged},
          {"burnin_cycles", run.cycles_used},
          {"acceptance_rates", run.acceptance_rates},
          {"warnings", run.warnings},
          {"evidence", to_json(z)}};
}

}  // namespace

ExampleResult run_example(std::uint64_t seed, const ExampleOptions& options) {
  const RngNode root = root_rng(seed);
  ExampleResult res;
  res.truth = options.truth;
  res.data = generate_sb_data(res.truth, options.detectors, root.partition(0), options.spectrum);

  const auto post_sb = make_posterior(Model::sb, res.data, options.detectors, options.spectrum);
  const auto post_bkg = make_posterior(Model::bkg, res.data, options.detectors, options.spectrum);
  res.sb = sample_posterior(post_sb, options.sampler, root.partition(1));
  res.bkg = sample_posterior(post_bkg, options.sampler, root.partition(2));
  res.z_sb = harmonic_mean_evidence(res.sb.samples, &post_sb->space());
  res.z_bkg = harmonic_mean_evidence(res.bkg.samples, &post_bkg->space());
  res.bf = bayes_factor(res.z_sb, res.z_bkg);

  const std::size_t n_det = options.detectors.size();
  std::vector<std::size_t> counts;
  for (const auto& e : res.data.energies) counts.push_back(e.size());
  auto& r = res.report;
  r["seed"] = seed;
  r["config"] = to_json(options.sampler);
  r["truth"] = {{"S", res.truth.s},
                {"lambda", res.truth.lambda},
                {"m_B", res.truth.m_b},
                {"sigma_B", res.truth.sigma_b},
                {"B", res.truth.b}};
  r["spectrum"] = {{"e_min", options.spectrum.e_min},
                   {"e_max", options.spectrum.e_max},
                   {"mu_s", options.spectrum.mu_s},
                   {"sigma_s", options.spectrum.sigma_s}};
  r["event_counts"] = counts;
  r["signal_counts"] = res.data.signal_counts;
  r["sb"] = model_report(post_sb, res.sb, res.z_sb, Model::sb, n_det);
  r["bkg"] = model_report(post_bkg, res.bkg, res.z_bkg, Model::bkg, n_det);
  r["Z_sb"] = res.z_sb.z;
  r["Z_bkg"] = res.z_bkg.z;
  r["bayes_factor"] = {{"value", res.bf.value}, {"sigma", res.bf.sigma}, {"log_value", res.bf.log_value}};
  return res;
}

ExampleResult run_example(std::uint64_t seed, const std::filesystem::path& out_dir,
                          const ExampleOptions& options) {
  ExampleResult res = run_example(seed, options);
  std::filesystem::create_directories(out_dir);
  std::string csv = "detector_id,energy\n";
  for (std::size_t i = 0; i < res.data.energies.size(); ++i) {
    for (double e : res.data.energies[i]) {
      char buf[48];
      std::snprintf(buf, sizeof buf, "%zu,%.17g\n", i + 1, e);
      csv += buf;
    }
  }
  write_text(out_dir / "data.csv", csv);
  write_samples(res.sb.samples, out_dir / "samples_sb.csv");
  write_samples(res.bkg.samples, out_dir / "samples_bkg.csv");
  const std::size_t n_det = options.detectors.size();
  for (Model m : {Model::sb, Model::bkg}) {
    const auto& batch = m == Model::sb ? res.sb.samples : res.bkg.samples;
    const auto names = param_names(m, n_det);
    for (std::size_t k = 0; k < hyper_count(m); ++k) {
      write_histogram(density_histogram(batch, k),
                      out_dir / ("marginal_" + std::string(to_string(m)) + "_" + names[k] + ".csv"));
    }
  }
  write_histogram(density_histogram_2d(res.sb.samples, 0, 1), out_dir / "hist2d_sb_S_lambda.csv");
  write_json(out_dir / "report.json", res.report);
  return res;
}

}  // namespace baton::sb
