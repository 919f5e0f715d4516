#include "baton/testsuite.hpp"

#include <algorithm>
#include <cmath>

#include "baton/diagnostics.hpp"
#include "baton/error.hpp"
#include "baton/evidence.hpp"
#include "baton/mh.hpp"
#include "baton/optimize.hpp"
#include "baton/test_densities.hpp"

namespace baton {

namespace {

nlohmann::json describe(const nlohmann::json& target, std::size_t dims) {
  nlohmann::json d = target.is_string() ? nlohmann::json{{"name", target}} : target;
  d["dims"] = dims;
  return d;
}

struct Attempt {
  SamplingResult run;
  std::vector<double> ess;
  std::vector<double> ks_p;
  bool ks_ok = true;
};

Attempt sample_and_test(const TestTarget& t, const TestSuiteConfig& cfg, const RngNode& rng) {
  Attempt a;
  a.run = sample_posterior(t.model, cfg.sampler, rng.partition(0));
  const auto& batch = a.run.samples;
  a.ess = ess(batch, IatMethod::geyer, cfg.sampler.exec);

  SampleBatch ref(t.model->dims());
  RngNode ref_rng = rng.partition(1);
  std::vector<double> x(t.model->dims());
  for (std::size_t i = 0; i < cfg.reference_samples; ++i) {
    t.model->sample_iid(ref_rng, x);
    ref.push_back(x, 1.0, 0.0, 0, i);
  }
  for (std::size_t k = 0; k < batch.dims(); ++k) {
    const auto col = batch.column(k);
    const auto rcol = ref.column(k);
    const auto r = ks_two_sample(col, batch.weights(), rcol, {}, a.ess[k],
                                 static_cast<double>(cfg.reference_samples));
    a.ks_p.push_back(r.p_value);
    a.ks_ok = a.ks_ok && r.p_value > cfg.ks_threshold;
  }
  return a;
}

PullStats marginal_pulls(const TestTarget& t, const SampleBatch& batch, std::size_t k,
                         double effective) {
  const Histogram1D h = marginal_histogram(batch, k);
  const double total = batch.total_weight();
  const double scale = effective / total;
  std::vector<double> obs, expd;
  for (std::size_t i = 0; i < h.weights.size(); ++i) {
    const double lo = h.lower + static_cast<double>(i) * h.width;
    const double p = t.marginal_cdf(k, lo + h.width) - t.marginal_cdf(k, lo);
    obs.push_back(h.weights[i] * scale);
    expd.push_back(p * total * scale);
  }
  return pull_stats(pull_histogram(obs, expd));
}

nlohmann::json run_case(const TestTarget& t, const TestSuiteConfig& cfg, const RngNode& rng) {
  const std::size_t d = t.model->dims();
  nlohmann::json rec{{"target_name", t.name}, {"dims", d}, {"params", t.params}};
  std::vector<std::string> failures;

  Attempt a = sample_and_test(t, cfg, rng.partition(0));
  bool retried = false;
  if (!a.ks_ok) {
    retried = true;
    a = sample_and_test(t, cfg, rng.partition(1));
  }
  const auto& batch = a.run.samples;

  const auto start = batch.row(batch.argmax_log_density());
  const auto mode = refine_mode(*t.model, start);
  const Eigen::VectorXd mean = weighted_mean(batch);
  const Eigen::MatrixXd cov = weighted_covariance(batch);
  std::vector<double> mean_est(d), var_est(d);
  for (std::size_t k = 0; k < d; ++k) {
    mean_est[k] = mean(static_cast<Eigen::Index>(k));
    var_est[k] = cov(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
  }

  const bool cauchy = t.name == "multi_cauchy";
  for (std::size_t k = 0; k < d; ++k) {
    const double tol = cfg.location_tolerance * std::max(1.0, std::abs(t.mode[k]));
    if (cauchy) {
      if (std::abs(std::abs(mode[k]) - std::abs(t.mode[k])) > cfg.cauchy_mode_tolerance) {
        failures.push_back("mode[" + std::to_string(k) + "]");
      }
      if (std::abs(mean_est[k] - t.mean[k]) > cfg.cauchy_mean_tolerance) {
        failures.push_back("mean[" + std::to_string(k) + "]");
      }
      continue;
    }
    if (std::abs(mode[k] - t.mode[k]) > tol) failures.push_back("mode[" + std::to_string(k) + "]");
    const double mtol = cfg.location_tolerance * std::max(1.0, std::abs(t.mean[k]));
    if (std::abs(mean_est[k] - t.mean[k]) > mtol) failures.push_back("mean[" + std::to_string(k) + "]");
    if (t.variance && std::abs(var_est[k] / (*t.variance)[k] - 1.0) > cfg.variance_tolerance) {
      failures.push_back("var[" + std::to_string(k) + "]");
    }
  }
  if (!a.ks_ok) failures.push_back("ks");

  nlohmann::json pulls = nlohmann::json::array();
  for (std::size_t k = 0; k < d; ++k) {
    const auto ps = marginal_pulls(t, batch, k, a.ess[k]);
    pulls.push_back({{"mean", ps.mean}, {"sd", ps.sd}, {"bins", ps.bins}});
  }

  nlohmann::json evidence;
  if (d > cfg.evidence_max_dims) {
    evidence = {{"skipped", true},
                {"reason", "above the harmonic-mean estimator's dimensional limit"}};
  } else {
    try {
      RegionOptions opts;
      opts.max_dims = cfg.evidence_max_dims;
      const auto z = harmonic_mean_evidence(batch, &t.model->space(), opts);
      evidence = to_json(z);
      evidence["skipped"] = false;
      const bool compatible = std::abs(z.z - 1.0) <= 3.0 * z.sigma_z;
      evidence["compatible_with_1"] = compatible;
      if (!compatible) failures.push_back("evidence");
    } catch (const std::exception& e) {
      evidence = {{"skipped", true}, {"reason", e.what()}};
    }
  }

  rec["mode_true"] = t.mode;
  rec["mode_est"] = mode;
  rec["mean_true"] = t.mean;
  rec["mean_est"] = mean_est;
  rec["var_true"] = t.variance ? nlohmann::json(*t.variance) : nlohmann::json(nullptr);
  rec["var_est"] = var_est;
  rec["ess"] = a.ess;
  rec["ks_pvalues"] = a.ks_p;
  rec["ks_retried"] = retried;
  rec["pull_stats"] = pulls;
  rec["evidence"] = evidence;
  rec["converged"] = a.run.converged;
  rec["burnin_cycles"] = a.run.cycles_used;
  rec["acceptance_rates"] = a.run.acceptance_rates;
  rec["failures"] = failures;
  rec["passed"] = failures.empty();
  return rec;
}

}  // namespace

TestSuiteConfig testsuite_config_from_json(const nlohmann::json& j, TestSuiteConfig cfg) {
  if (!j.is_object()) throw ContractViolation("test-suite configuration must be a JSON object");
  if (j.contains("targets")) cfg.targets = j.at("targets");
  if (!cfg.targets.is_array()) throw ContractViolation("'targets' must be an array");
  if (j.contains("dims")) cfg.dims = j.at("dims").get<std::vector<std::size_t>>();
  if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("n_samples")) cfg.sampler.burnin.n_final_samples = j.at("n_samples").get<std::size_t>();
  if (j.contains("sampler_config")) cfg.sampler = sampler_config_from_json(j.at("sampler_config"), cfg.sampler);
  if (j.contains("sampler")) cfg.sampler.kind = parse_sampler_kind(j.at("sampler").get<std::string>());
  cfg.reference_samples = j.value("reference_samples", cfg.reference_samples);
  cfg.ks_threshold = j.value("ks_threshold", cfg.ks_threshold);
  cfg.location_tolerance = j.value("location_tolerance", cfg.location_tolerance);
  cfg.variance_tolerance = j.value("variance_tolerance", cfg.variance_tolerance);
  cfg.cauchy_mode_tolerance = j.value("cauchy_mode_tolerance", cfg.cauchy_mode_tolerance);
  cfg.cauchy_mean_tolerance = j.value("cauchy_mean_tolerance", cfg.cauchy_mean_tolerance);
  cfg.evidence_max_dims = j.value("evidence_max_dims", cfg.evidence_max_dims);
  return cfg;
}

nlohmann::json to_json(const TestSuiteConfig& cfg) {
  return {{"targets", cfg.targets},
          {"dims", cfg.dims},
          {"seed", cfg.seed},
          {"n_samples", cfg.sampler.burnin.n_final_samples},
          {"sampler", to_string(cfg.sampler.kind)},
          {"sampler_config", to_json(cfg.sampler)},
          {"reference_samples", cfg.reference_samples},
          {"ks_threshold", cfg.ks_threshold},
          {"location_tolerance", cfg.location_tolerance},
          {"variance_tolerance", cfg.variance_tolerance},
          {"cauchy_mode_tolerance", cfg.cauchy_mode_tolerance},
          {"cauchy_mean_tolerance", cfg.cauchy_mean_tolerance},
          {"evidence_max_dims", cfg.evidence_max_dims}};
}

nlohmann::json run_testsuite(const TestSuiteConfig& cfg) {
  const RngNode root = root_rng(cfg.seed);
  nlohmann::json cases = nlohmann::json::array();
  std::size_t failed = 0;
  for (std::size_t ti = 0; ti < cfg.targets.size(); ++ti) {
    for (std::size_t dims : cfg.dims) {
      const auto desc = describe(cfg.targets[ti], dims);
      nlohmann::json rec;
      try {
        const TestTarget t = make_test_target(desc);
        rec = run_case(t, cfg, root.partition(ti).partition(dims));
      } catch (const std::exception& e) {
        rec = {{"target_name", desc.value("name", std::string("?"))},
               {"dims", dims},
               {"error", e.what()},
               {"passed", false}};
      }
      rec["seed"] = cfg.seed;
      rec["config"] = to_json(cfg.sampler);
      if (!rec.at("passed").get<bool>()) ++failed;
      cases.push_back(std::move(rec));
    }
  }
  return {{"seed", cfg.seed},
          {"config", to_json(cfg)},
          {"cases", cases},
          {"failed_cases", failed},
          {"passed", failed == 0}};
}

}  // namespace baton
