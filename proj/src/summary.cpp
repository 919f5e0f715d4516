#include <cstdio>
#include <string>

#include "baton/error.hpp"
#include "baton/io.hpp"

namespace baton {

namespace {

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string label(const std::string& s) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%-12s", s.c_str());
  return buf;
}

std::string cell(const char* s) {
  char buf[32];
  std::snprintf(buf, sizeof buf, " %12s", s);
  return buf;
}

}  // namespace

BatchDiagnostics diagnose(const SampleBatch& batch, kernels::Exec exec,
                          std::vector<std::string> names) {
  if (batch.empty()) throw ContractViolation("cannot diagnose an empty batch");
  BatchDiagnostics d;
  const std::size_t dims = batch.dims();
  if (names.size() != dims) {
    names.clear();
    for (std::size_t k = 0; k < dims; ++k) names.push_back("v_" + std::to_string(k + 1));
  }
  d.names = std::move(names);
  for (std::size_t k = 0; k < dims; ++k) {
    d.estimates.push_back(point_estimates(batch, k));
    d.marginal_modes.push_back(marginal_mode(batch, k));
  }
  try {
    d.ess = ess(batch, IatMethod::geyer, exec);
  } catch (const ContractViolation&) {
    // Fractional weights: no chain structure to exploit.
    d.ess.clear();
  }
  if (batch.chain_list().size() >= 2) {
    try {
      d.convergence = check_convergence(batch);
    } catch (const std::exception&) {
      d.convergence.reset();
    }
  }
  const auto best = batch.row(batch.argmax_log_density());
  d.global_mode.assign(best.begin(), best.end());
  return d;
}

bool is_converged(const BatchDiagnostics& d) {
  if (d.converged) return *d.converged;
  return d.convergence ? d.convergence->converged : true;
}

nlohmann::json to_json(const BatchDiagnostics& d) {
  nlohmann::json est = nlohmann::json::object();
  for (std::size_t k = 0; k < d.names.size(); ++k) {
    const auto& e = d.estimates[k];
    est[d.names[k]] = {{"mean", e.mean},
                       {"median", e.median},
                       {"std", e.std},
                       {"levels", e.levels},
                       {"quantiles", e.quantiles},
                       {"marginal_mode", d.marginal_modes[k]}};
  }
  nlohmann::json j{{"names", d.names},
                   {"estimates", est},
                   {"ess", d.ess},
                   {"global_mode", d.global_mode},
                   {"converged", is_converged(d)}};
  if (d.convergence) {
    j["psrf"] = d.convergence->psrf;
    j["mpsrf"] = d.convergence->mpsrf;
  } else {
    j["psrf"] = nullptr;
    j["mpsrf"] = nullptr;
  }
  return j;
}

std::string summarize(const SampleBatch& batch, const BatchDiagnostics& d) {
  const std::string dash = cell("-");
  std::string out = "samples: " + std::to_string(batch.size()) +
                    fmt(", total weight: %.17g", batch.total_weight()) +
                    ", chains: " + std::to_string(batch.chain_list().size()) + "\n";
  out += label("parameter");
  for (const char* c : {"mean", "median", "std", "q16", "q50", "q84", "ESS", "R-hat"}) out += cell(c);
  out += '\n';
  for (std::size_t k = 0; k < d.names.size(); ++k) {
    const auto& e = d.estimates[k];
    auto quantile = [&](double level) {
      for (std::size_t i = 0; i < e.levels.size(); ++i) {
        if (e.levels[i] == level) return fmt(" %12.6g", e.quantiles[i]);
      }
      return dash;
    };
    out += label(d.names[k]);
    out += fmt(" %12.6g", e.mean) + fmt(" %12.6g", e.median) + fmt(" %12.6g", e.std);
    out += quantile(0.16) + quantile(0.5) + quantile(0.84);
    out += k < d.ess.size() ? fmt(" %12.1f", d.ess[k]) : dash;
    out += d.convergence ? fmt(" %12.4f", d.convergence->psrf[k]) : dash;
    out += '\n';
  }
  out += "global mode:";
  for (double v : d.global_mode) out += fmt(" %.6g", v);
  out += '\n';
  if (d.convergence) out += fmt("multivariate R-hat: %.4f\n", d.convergence->mpsrf);
  if (!d.converged && !d.convergence) {
    out += "convergence: not assessed (single chain)\n";
  } else {
    out += is_converged(d) ? "convergence: yes\n"
                           : "WARNING: chains have not converged; estimates may be unreliable\n";
  }
  return out;
}

}  // namespace baton
