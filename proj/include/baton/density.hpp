#pragma once

#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "baton/error.hpp"
#include "baton/rng.hpp"
#include "baton/sample_batch.hpp"

namespace baton {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct ParameterSpace {
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<std::string> names;

  static ParameterSpace unbounded(std::size_t dims);
  static ParameterSpace box(std::vector<double> lower, std::vector<double> upper,
                            std::vector<std::string> names = {});
  /// Concatenates `tail` after `head`.
  static ParameterSpace concat(const ParameterSpace& head, const ParameterSpace& tail);

  std::size_t dims() const noexcept { return lower.size(); }
  bool contains(std::span<const double> x) const noexcept;
  bool all_finite() const noexcept;
  bool all_infinite() const noexcept;
  /// Throws ContractViolation unless lower < upper everywhere and sizes agree.
  void validate() const;

  friend bool operator==(const ParameterSpace&, const ParameterSpace&) = default;
};

enum class DensityRole { prior, likelihood, posterior, generic };

const char* to_string(DensityRole role) noexcept;

/// Unnormalized log-density over a ParameterSpace.
///
/// Implementations override `eval`, which is only ever called with an
/// in-bounds point of the right length. The public entry points are pure and
/// safe to call concurrently.
class Density {
 public:
  Density(ParameterSpace space, DensityRole role);
  virtual ~Density() = default;

  Density(const Density&) = delete;
  Density& operator=(const Density&) = delete;

  const ParameterSpace& space() const noexcept { return space_; }
  std::size_t dims() const noexcept { return space_.dims(); }
  DensityRole role() const noexcept { return role_; }

  /// Finite value or -inf. Out-of-bounds points give -inf; a wrong length
  /// throws ContractViolation; NaN or +inf from the implementation throws
  /// NumericalError.
  double log_density(std::span<const double> x) const;

  virtual bool iid_capable() const noexcept { return false; }
  /// Writes one exact draw into `out` (length dims()).
  virtual void sample_iid(RngNode& rng, std::span<double> out) const;

  virtual bool has_gradient() const noexcept { return false; }
  /// Gradient of the log-density at an in-bounds point.
  virtual void gradient(std::span<const double> x, std::span<double> out) const;
  /// False when the density is not smooth in all coordinates; gradient-based
  /// samplers refuse such targets.
  virtual bool differentiable() const noexcept { return true; }

  /// Marginal variances, when known in closed form.
  virtual std::optional<std::vector<double>> marginal_variances() const {
    return std::nullopt;
  }

  /// The prior factor of a posterior, or nullptr.
  virtual const Density* prior() const noexcept { return nullptr; }

 protected:
  virtual double eval(std::span<const double> x) const = 0;

 private:
  ParameterSpace space_;
  DensityRole role_;
};

using DensityModel = std::shared_ptr<const Density>;

/// Density built from callables; the escape hatch for user models.
struct FunctionDensitySpec {
  ParameterSpace space;
  DensityRole role = DensityRole::generic;
  std::function<double(std::span<const double>)> log_density;
  std::function<void(std::span<const double>, std::span<double>)> gradient;
  std::function<void(RngNode&, std::span<double>)> sample_iid;
  std::optional<std::vector<double>> marginal_variances;
  bool differentiable = true;
};

DensityModel make_function_density(FunctionDensitySpec spec);

/// Independent uniform distribution over a finite box.
DensityModel make_uniform_prior(std::vector<double> lower, std::vector<double> upper,
                                std::vector<std::string> names = {});

/// 1D log-normal with log-mean `mu` and log-sd `sigma`.
DensityModel make_lognormal(double mu, double sigma);

/// Independent components laid out one after another.
DensityModel make_product(std::vector<DensityModel> components);

/// Posterior = likelihood * prior on an identical space.
DensityModel build_posterior(const DensityModel& likelihood, const DensityModel& prior);

/// Hyperparameters first, then the conditional block whose distribution
/// depends on them. `conditional_space` fixes the bounds of the second block.
struct HierarchicalPriorSpec {
  DensityModel hyper_prior;
  ParameterSpace conditional_space;
  std::function<DensityModel(std::span<const double> hyper)> conditional;
};

DensityModel make_hierarchical_prior(HierarchicalPriorSpec spec);

/// n exact draws with weight 1 and their log-densities (chain 0, steps
/// 0..n-1). Throws UnsupportedOperation unless the density is iid-capable.
SampleBatch prior_iid_sample(const Density& prior, RngNode& rng, std::size_t n);

}  // namespace baton
