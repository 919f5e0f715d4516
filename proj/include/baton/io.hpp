#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "baton/diagnostics.hpp"
#include "baton/kernels.hpp"
#include "baton/sample_batch.hpp"

namespace baton {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Sample CSV: chain_id,step,weight,log_density,v_1..v_d with 17 significant
// digits, so that a write/read round trip is exact.

void write_samples(const SampleBatch& batch, std::ostream& out);
void write_samples(const SampleBatch& batch, const std::filesystem::path& path);
SampleBatch read_samples(std::istream& in, const std::string& source = "<stream>");
SampleBatch read_samples(const std::filesystem::path& path);

/// Writes `text` to `path`, creating parent directories.
void write_text(const std::filesystem::path& path, const std::string& text);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Summaries

struct BatchDiagnostics {
  std::vector<std::string> names;
  std::vector<PointEstimates> estimates;
  std::vector<double> ess;
  /// Absent for single-chain batches.
  std::optional<ConvergenceReport> convergence;
  std::vector<double> global_mode;
  std::vector<double> marginal_modes;
  /// Burn-in verdict, when known; otherwise the convergence report decides.
  std::optional<bool> converged;
};

/// Point estimates, ESS, R-hat (when there are several chains) and the
/// highest-density sample as the global mode.
BatchDiagnostics diagnose(const SampleBatch& batch, kernels::Exec exec = {},
                          std::vector<std::string> names = {});
nlohmann::json to_json(const BatchDiagnostics& d);
bool is_converged(const BatchDiagnostics& d);

/// Deterministic plain-text table, one row per dimension.
std::string summarize(const SampleBatch& batch, const BatchDiagnostics& diagnostics);

// ---------------------------------------------------------------------------
// Plot data

/// Histogram normalised to unit integral.
Histogram1D density_histogram(const SampleBatch& batch, std::size_t k,
                              BinningRule rule = BinningRule::freedman_diaconis);

struct Histogram2D {
  double x_lower = 0.0, x_width = 0.0;
  double y_lower = 0.0, y_width = 0.0;
  std::size_t nx = 0, ny = 0;
  /// Row-major over (x, y), normalised to unit integral.
  std::vector<double> density;
  /// Smallest probability level (percent) whose highest-density region
  /// contains the bin; 100 when none does.
  std::vector<double> level;

  double x_center(std::size_t i) const { return x_lower + (static_cast<double>(i) + 0.5) * x_width; }
  double y_center(std::size_t j) const { return y_lower + (static_cast<double>(j) + 0.5) * y_width; }
};

inline const std::vector<double> kDefaultLevels{68.3, 95.5, 99.7};

Histogram2D density_histogram_2d(const SampleBatch& batch, std::size_t k, std::size_t l,
                                 const std::vector<double>& levels = kDefaultLevels,
                                 BinningRule rule = BinningRule::freedman_diaconis);

/// bin_center,density
void write_histogram(const Histogram1D& h, const std::filesystem::path& path);
/// bin_x,bin_y,density,level
void write_histogram(const Histogram2D& h, const std::filesystem::path& path);

}  // namespace baton
