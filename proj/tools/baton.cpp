#include <cstdlib>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "baton/diagnostics.hpp"
#include "baton/error.hpp"
#include "baton/evidence.hpp"
#include "baton/io.hpp"
#include "baton/sampling.hpp"
#include "baton/sb_example.hpp"
#include "baton/test_densities.hpp"
#include "baton/testsuite.hpp"

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct Globals {
  std::uint64_t seed = 42;
  int threads = 0;
  std::string config;
};

int resolve_threads(int flag) { return flag > 0 ? flag : baton::kernels::default_threads(); }

nlohmann::json load_config(const std::string& path) {
  return path.empty() ? nlohmann::json::object() : baton::read_json(path);
}

/// A built-in name, optionally with --dims, or a JSON description.
baton::TestTarget resolve_model(const std::string& spec, std::size_t dims) {
  nlohmann::json desc;
  if (!spec.empty() && spec.front() == '{') {
    desc = nlohmann::json::parse(spec);
    if (!desc.contains("dims")) desc["dims"] = dims;
  } else {
    desc = {{"name", spec}, {"dims", dims}};
  }
  return baton::make_test_target(desc);
}

struct SampleArgs {
  std::string model = "normal";
  std::size_t dims = 2;
  std::string sampler;
  std::size_t chains = 0;
  std::size_t samples = 0;
  std::size_t leapfrog = 0;
  double target_accept = 0.0;
  std::string grad;
  std::string out = "samples.csv";
  std::string report;
};

int cmd_sample(const Globals& g, const SampleArgs& a) {
  const nlohmann::json file_cfg = load_config(g.config);
  nlohmann::json over = nlohmann::json::object();
  if (!a.sampler.empty()) over["sampler"] = a.sampler;
  if (a.chains) over["n_chains"] = a.chains;
  if (a.samples) over["n_final_samples"] = a.samples;
  if (a.leapfrog) over["hmc"]["n_leapfrog"] = a.leapfrog;
  if (a.target_accept > 0.0) over["hmc"]["target_accept"] = a.target_accept;
  if (!a.grad.empty()) over["hmc"]["gradient"] = a.grad;
  baton::SamplerConfig cfg = baton::sampler_config_from_json(over, baton::sampler_config_from_json(file_cfg));
  cfg.exec.threads = resolve_threads(g.threads);

  const auto target = resolve_model(a.model, a.dims);
  const auto run = baton::sample_posterior(target.model, cfg, baton::root_rng(g.seed));
  for (const auto& w : run.warnings) std::cerr << "warning: " << w << '\n';
  baton::write_samples(run.samples, a.out);

  auto diag = baton::diagnose(run.samples, cfg.exec, target.model->space().names);
  diag.converged = run.converged;
  std::cout << baton::summarize(run.samples, diag);
  if (!a.report.empty()) {
    nlohmann::json r = baton::to_json(diag);
    r["seed"] = g.seed;
    r["model"] = target.params;
    r["config"] = baton::to_json(cfg);
    r["burnin_cycles"] = run.cycles_used;
    r["acceptance_rates"] = run.acceptance_rates;
    baton::write_json(a.report, r);
  }
  return 0;
}

int cmd_diagnose(const Globals& g, const std::string& in, const std::string& out) {
  const auto batch = baton::read_samples(std::filesystem::path(in));
  const auto diag = baton::diagnose(batch, {resolve_threads(g.threads)});
  std::cout << baton::summarize(batch, diag);
  if (!out.empty()) baton::write_json(out, baton::to_json(diag));
  return 0;
}

struct IntegrateArgs {
  std::string in;
  std::string model;
  std::size_t dims = 2;
  std::string method = "ahmi";
  std::size_t n = 1000000;
  bool stratified = false;
  std::vector<double> box;
  std::string out;
};

int cmd_integrate(const Globals& g, const IntegrateArgs& a) {
  baton::EvidenceResult z;
  if (a.method == "ahmi") {
    if (a.in.empty()) throw CLI::ValidationError("--in", "the harmonic-mean method needs --in samples.csv");
    const auto batch = baton::read_samples(std::filesystem::path(a.in));
    std::optional<baton::TestTarget> target;
    if (!a.model.empty()) target = resolve_model(a.model, batch.dims());
    z = baton::harmonic_mean_evidence(batch, target ? &target->model->space() : nullptr);
  } else if (a.method == "mc") {
    if (a.model.empty()) throw CLI::ValidationError("--model", "Monte Carlo integration needs --model");
    const auto target = resolve_model(a.model, a.dims);
    const std::size_t d = target.model->dims();
    std::vector<double> lo(d), hi(d);
    if (a.box.size() == 2 * d) {
      for (std::size_t k = 0; k < d; ++k) {
        lo[k] = a.box[2 * k];
        hi[k] = a.box[2 * k + 1];
      }
    } else if (a.box.empty() && target.variance) {
      for (std::size_t k = 0; k < d; ++k) {
        const double s = std::sqrt((*target.variance)[k]);
        lo[k] = target.mean[k] - 8.0 * s;
        hi[k] = target.mean[k] + 8.0 * s;
      }
    } else {
      throw CLI::ValidationError("--box", "give lo,hi for every dimension");
    }
    z = baton::mc_cubature(*target.model, baton::HyperRectangle::box(lo, hi), a.n, a.stratified,
                           baton::root_rng(g.seed), {resolve_threads(g.threads)});
  } else {
    throw CLI::ValidationError("--method", "expected ahmi or mc");
  }
  nlohmann::json j = baton::to_json(z);
  j["seed"] = g.seed;
  std::cout << j.dump(2) << '\n';
  if (!a.out.empty()) baton::write_json(a.out, j);
  return 0;
}

int cmd_testsuite(const Globals& g, const std::string& out, const std::string& sampler,
                  std::size_t samples, bool seed_given) {
  baton::TestSuiteConfig cfg = baton::testsuite_config_from_json(load_config(g.config));
  if (seed_given) cfg.seed = g.seed;
  if (!sampler.empty()) cfg.sampler.kind = baton::parse_sampler_kind(sampler);
  if (samples) cfg.sampler.burnin.n_final_samples = samples;
  cfg.sampler.exec.threads = resolve_threads(g.threads);
  const auto report = baton::run_testsuite(cfg);
  if (!out.empty()) baton::write_json(out, report);
  for (const auto& c : report.at("cases")) {
    std::cout << (c.at("passed").get<bool>() ? "PASS " : "FAIL ")
              << c.value("target_name", std::string("?")) << " d=" << c.at("dims").get<std::size_t>();
    if (c.contains("failures") && !c.at("failures").empty()) std::cout << " " << c.at("failures").dump();
    if (c.contains("error")) std::cout << " error: " << c.at("error").get<std::string>();
    std::cout << '\n';
  }
  return report.at("passed").get<bool>() ? 0 : kExitFailure;
}

int cmd_example_sb(const Globals& g, const std::string& out, std::size_t samples) {
  baton::sb::ExampleOptions opts;
  opts.sampler = baton::sampler_config_from_json(load_config(g.config));
  if (samples) opts.sampler.burnin.n_final_samples = samples;
  opts.sampler.exec.threads = resolve_threads(g.threads);
  const auto res = baton::sb::run_example(g.seed, std::filesystem::path(out), opts);
  const auto& r = res.report;
  std::cout << "events: " << res.data.total() << "\n"
            << "S marginal mode: " << r["sb"]["parameters"]["S"]["marginal_mode"] << "\n"
            << "lambda marginal mode: " << r["sb"]["parameters"]["lambda"]["marginal_mode"] << "\n"
            << "Z_sb: " << res.z_sb.z << " +- " << res.z_sb.sigma_z << "\n"
            << "Z_bkg: " << res.z_bkg.z << " +- " << res.z_bkg.sigma_z << "\n"
            << "Bayes factor: " << res.bf.value << " +- " << res.bf.sigma << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"baton: Bayesian inference toolkit"};
  app.require_subcommand(1);
  Globals g;
  auto* seed_opt = app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads (default: BATON_THREADS or 1)");
  app.add_option("--config", g.config, "JSON configuration file");
  app.fallthrough();

  SampleArgs sa;
  auto* sample = app.add_subcommand("sample", "Sample a built-in model and write a CSV");
  sample->add_option("--model", sa.model, "Model name or JSON description")->capture_default_str();
  sample->add_option("--dims", sa.dims, "Dimensions for a named model")->capture_default_str();
  sample->add_option("--sampler", sa.sampler, "mh or hmc")->check(CLI::IsMember({"mh", "hmc"}));
  sample->add_option("--chains", sa.chains, "Number of chains");
  sample->add_option("--samples", sa.samples, "Samples per chain");
  sample->add_option("--leapfrog-steps", sa.leapfrog, "HMC leapfrog steps");
  sample->add_option("--target-accept", sa.target_accept, "HMC target acceptance");
  sample->add_option("--grad", sa.grad, "Gradient source")->check(CLI::IsMember({"auto", "user", "fd"}));
  sample->add_option("--out", sa.out, "Output CSV")->capture_default_str();
  sample->add_option("--report", sa.report, "Optional JSON report");

  std::string diag_in, diag_out;
  auto* diagnose = app.add_subcommand("diagnose", "Summarize a sample CSV");
  diagnose->add_option("--in", diag_in, "Input CSV")->required();
  diagnose->add_option("--out", diag_out, "JSON report");

  IntegrateArgs ia;
  auto* integrate = app.add_subcommand("integrate", "Estimate the evidence");
  integrate->add_option("--in", ia.in, "Input CSV (ahmi)");
  integrate->add_option("--model", ia.model, "Model name or JSON description");
  integrate->add_option("--dims", ia.dims, "Dimensions for a named model (mc)");
  integrate->add_option("--method", ia.method, "ahmi or mc")->check(CLI::IsMember({"ahmi", "mc"}));
  integrate->add_option("--n", ia.n, "Draws (mc)");
  integrate->add_flag("--stratified", ia.stratified, "Stratified grid (mc)");
  integrate->add_option("--box", ia.box, "lo1,hi1,lo2,hi2,... (mc)")->delimiter(',');
  integrate->add_option("--out", ia.out, "JSON output");

  std::string ts_out, ts_sampler;
  std::size_t ts_samples = 0;
  auto* testsuite = app.add_subcommand("testsuite", "Run the numerical test suite");
  testsuite->add_option("--out", ts_out, "JSON report");
  testsuite->add_option("--sampler", ts_sampler, "mh or hmc")->check(CLI::IsMember({"mh", "hmc"}));
  testsuite->add_option("--samples", ts_samples, "Samples per chain");

  std::string ex_out = "sb_example";
  std::size_t ex_samples = 0;
  auto* example = app.add_subcommand("example", "Run a worked example");
  example->require_subcommand(1);
  auto* sb = example->add_subcommand("sb", "Signal-plus-background model comparison");
  sb->add_option("--out", ex_out, "Output directory")->capture_default_str();
  sb->add_option("--samples", ex_samples, "Samples per chain");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*sample) return cmd_sample(g, sa);
    if (*diagnose) return cmd_diagnose(g, diag_in, diag_out);
    if (*integrate) return cmd_integrate(g, ia);
    if (*testsuite) return cmd_testsuite(g, ts_out, ts_sampler, ts_samples, seed_opt->count() > 0);
    if (*sb) return cmd_example_sb(g, ex_out, ex_samples);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const baton::ContractViolation& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}
