#include "baton/density.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace baton {

ParameterSpace ParameterSpace::unbounded(std::size_t dims) {
  return ParameterSpace{std::vector<double>(dims, kNegInf), std::vector<double>(dims, kInf),
                        {}};
}

ParameterSpace ParameterSpace::box(std::vector<double> lower, std::vector<double> upper,
                                   std::vector<std::string> names) {
  ParameterSpace space{std::move(lower), std::move(upper), std::move(names)};
  space.validate();
  return space;
}

ParameterSpace ParameterSpace::concat(const ParameterSpace& head, const ParameterSpace& tail) {
  ParameterSpace out = head;
  out.lower.insert(out.lower.end(), tail.lower.begin(), tail.lower.end());
  out.upper.insert(out.upper.end(), tail.upper.begin(), tail.upper.end());
  if (!head.names.empty() || !tail.names.empty()) {
    out.names.resize(head.dims());
    auto tail_names = tail.names;
    tail_names.resize(tail.dims());
    out.names.insert(out.names.end(), tail_names.begin(), tail_names.end());
  }
  return out;
}

bool ParameterSpace::contains(std::span<const double> x) const noexcept {
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (!(x[k] >= lower[k] && x[k] <= upper[k])) return false;
  }
  return true;
}

bool ParameterSpace::all_finite() const noexcept {
  for (std::size_t k = 0; k < dims(); ++k) {
    if (!std::isfinite(lower[k]) || !std::isfinite(upper[k])) return false;
  }
  return true;
}

bool ParameterSpace::all_infinite() const noexcept {
  for (std::size_t k = 0; k < dims(); ++k) {
    if (std::isfinite(lower[k]) || std::isfinite(upper[k])) return false;
  }
  return true;
}

void ParameterSpace::validate() const {
  if (lower.empty()) throw ContractViolation("parameter space needs at least one dimension");
  if (upper.size() != lower.size()) {
    throw ContractViolation("parameter space bounds have different lengths");
  }
  if (!names.empty() && names.size() != lower.size()) {
    throw ContractViolation("parameter space names do not match dimension count");
  }
  for (std::size_t k = 0; k < lower.size(); ++k) {
    if (!(lower[k] < upper[k])) {
      throw ContractViolation("parameter space requires lower < upper in dimension " +
                              std::to_string(k));
    }
  }
}

const char* to_string(DensityRole role) noexcept {
  switch (role) {
    case DensityRole::prior: return "prior";
    case DensityRole::likelihood: return "likelihood";
    case DensityRole::posterior: return "posterior";
    case DensityRole::generic: return "generic";
  }
  return "generic";
}

Density::Density(ParameterSpace space, DensityRole role)
    : space_(std::move(space)), role_(role) {
  space_.validate();
}

double Density::log_density(std::span<const double> x) const {
  if (x.size() != dims()) {
    throw ContractViolation("point has " + std::to_string(x.size()) +
                            " coordinates, density expects " + std::to_string(dims()));
  }
  if (!space_.contains(x)) return kNegInf;
  const double value = eval(x);
  if (std::isnan(value) || value == kInf) {
    throw NumericalError("log-density evaluated to NaN or +inf");
  }
  return value;
}

void Density::sample_iid(RngNode&, std::span<double>) const {
  throw UnsupportedOperation("density does not support iid sampling");
}

void Density::gradient(std::span<const double>, std::span<double>) const {
  throw UnsupportedOperation("density provides no analytic gradient");
}

namespace {

class FunctionDensity final : public Density {
 public:
  explicit FunctionDensity(FunctionDensitySpec spec)
      : Density(spec.space, spec.role), spec_(std::move(spec)) {
    if (!spec_.log_density) throw ContractViolation("function density needs a log_density");
  }

  bool iid_capable() const noexcept override { return static_cast<bool>(spec_.sample_iid); }
  void sample_iid(RngNode& rng, std::span<double> out) const override {
    if (!spec_.sample_iid) Density::sample_iid(rng, out);
    spec_.sample_iid(rng, out);
  }
  bool has_gradient() const noexcept override { return static_cast<bool>(spec_.gradient); }
  void gradient(std::span<const double> x, std::span<double> out) const override {
    if (!spec_.gradient) Density::gradient(x, out);
    spec_.gradient(x, out);
  }
  bool differentiable() const noexcept override { return spec_.differentiable; }
  std::optional<std::vector<double>> marginal_variances() const override {
    return spec_.marginal_variances;
  }

 protected:
  double eval(std::span<const double> x) const override { return spec_.log_density(x); }

 private:
  FunctionDensitySpec spec_;
};

class UniformPrior final : public Density {
 public:
  UniformPrior(ParameterSpace space) : Density(std::move(space), DensityRole::prior) {
    if (!this->space().all_finite()) {
      throw ContractViolation("uniform prior needs finite bounds");
    }
    for (std::size_t k = 0; k < dims(); ++k) {
      log_norm_ -= std::log(this->space().upper[k] - this->space().lower[k]);
    }
  }

  bool iid_capable() const noexcept override { return true; }
  void sample_iid(RngNode& rng, std::span<double> out) const override {
    const auto& s = space();
    for (std::size_t k = 0; k < dims(); ++k) {
      out[k] = s.lower[k] + (s.upper[k] - s.lower[k]) * rng.uniform();
    }
  }
  bool has_gradient() const noexcept override { return true; }
  void gradient(std::span<const double>, std::span<double> out) const override {
    std::fill(out.begin(), out.end(), 0.0);
  }
  std::optional<std::vector<double>> marginal_variances() const override {
    std::vector<double> v(dims());
    for (std::size_t k = 0; k < dims(); ++k) {
      const double w = space().upper[k] - space().lower[k];
      v[k] = w * w / 12.0;
    }
    return v;
  }

 protected:
  double eval(std::span<const double>) const override { return log_norm_; }

 private:
  double log_norm_ = 0.0;
};

class LogNormal final : public Density {
 public:
  LogNormal(double mu, double sigma)
      : Density(ParameterSpace::box({0.0}, {kInf}), DensityRole::prior), mu_(mu), sigma_(sigma) {
    if (!(sigma > 0.0) || !std::isfinite(mu)) {
      throw ContractViolation("log-normal needs finite mu and sigma > 0");
    }
  }

  bool iid_capable() const noexcept override { return true; }
  void sample_iid(RngNode& rng, std::span<double> out) const override {
    out[0] = rng.lognormal(mu_, sigma_);
  }
  bool has_gradient() const noexcept override { return true; }
  void gradient(std::span<const double> x, std::span<double> out) const override {
    const double z = (std::log(x[0]) - mu_) / sigma_;
    out[0] = -(1.0 + z / sigma_) / x[0];
  }
  std::optional<std::vector<double>> marginal_variances() const override {
    const double s2 = sigma_ * sigma_;
    return std::vector<double>{std::expm1(s2) * std::exp(2.0 * mu_ + s2)};
  }

 protected:
  double eval(std::span<const double> x) const override {
    if (x[0] <= 0.0) return kNegInf;
    const double lx = std::log(x[0]);
    const double z = (lx - mu_) / sigma_;
    return -0.5 * z * z - lx - std::log(sigma_) - 0.5 * std::log(2.0 * std::numbers::pi);
  }

 private:
  double mu_;
  double sigma_;
};

ParameterSpace concat_spaces(const std::vector<DensityModel>& parts) {
  if (parts.empty()) throw ContractViolation("product density needs components");
  ParameterSpace space = parts.front()->space();
  for (std::size_t i = 1; i < parts.size(); ++i) {
    space = ParameterSpace::concat(space, parts[i]->space());
  }
  return space;
}

class ProductDensity final : public Density {
 public:
  explicit ProductDensity(std::vector<DensityModel> parts)
      : Density(concat_spaces(parts), parts.front()->role()), parts_(std::move(parts)) {}

  bool iid_capable() const noexcept override {
    for (const auto& p : parts_) {
      if (!p->iid_capable()) return false;
    }
    return true;
  }
  void sample_iid(RngNode& rng, std::span<double> out) const override {
    std::size_t offset = 0;
    for (const auto& p : parts_) {
      p->sample_iid(rng, out.subspan(offset, p->dims()));
      offset += p->dims();
    }
  }
  bool has_gradient() const noexcept override {
    for (const auto& p : parts_) {
      if (!p->has_gradient()) return false;
    }
    return true;
  }
  void gradient(std::span<const double> x, std::span<double> out) const override {
    std::size_t offset = 0;
    for (const auto& p : parts_) {
      p->gradient(x.subspan(offset, p->dims()), out.subspan(offset, p->dims()));
      offset += p->dims();
    }
  }
  bool differentiable() const noexcept override {
    for (const auto& p : parts_) {
      if (!p->differentiable()) return false;
    }
    return true;
  }
  std::optional<std::vector<double>> marginal_variances() const override {
    std::vector<double> out;
    for (const auto& p : parts_) {
      auto v = p->marginal_variances();
      if (!v) return std::nullopt;
      out.insert(out.end(), v->begin(), v->end());
    }
    return out;
  }

 protected:
  double eval(std::span<const double> x) const override {
    double total = 0.0;
    std::size_t offset = 0;
    for (const auto& p : parts_) {
      total += p->log_density(x.subspan(offset, p->dims()));
      if (total == kNegInf) return total;
      offset += p->dims();
    }
    return total;
  }

 private:
  std::vector<DensityModel> parts_;
};

class PosteriorDensity final : public Density {
 public:
  PosteriorDensity(DensityModel likelihood, DensityModel prior)
      : Density(likelihood->space(), DensityRole::posterior),
        likelihood_(std::move(likelihood)),
        prior_(std::move(prior)) {}

  bool has_gradient() const noexcept override {
    return likelihood_->has_gradient() && prior_->has_gradient();
  }
  void gradient(std::span<const double> x, std::span<double> out) const override {
    std::vector<double> tmp(out.size());
    likelihood_->gradient(x, out);
    prior_->gradient(x, tmp);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += tmp[k];
  }
  bool differentiable() const noexcept override {
    return likelihood_->differentiable() && prior_->differentiable();
  }
  std::optional<std::vector<double>> marginal_variances() const override {
    return prior_->marginal_variances();
  }
  const Density* prior() const noexcept override { return prior_.get(); }

 protected:
  double eval(std::span<const double> x) const override {
    const double lp = prior_->log_density(x);
    if (lp == kNegInf) return lp;
    return likelihood_->log_density(x) + lp;
  }

 private:
  DensityModel likelihood_;
  DensityModel prior_;
};

class HierarchicalPrior final : public Density {
 public:
  explicit HierarchicalPrior(HierarchicalPriorSpec spec)
      : Density(ParameterSpace::concat(spec.hyper_prior->space(), spec.conditional_space),
                DensityRole::prior),
        spec_(std::move(spec)),
        n_hyper_(spec_.hyper_prior->dims()) {
    if (!spec_.conditional) throw ContractViolation("hierarchical prior needs a conditional");
  }

  bool iid_capable() const noexcept override { return spec_.hyper_prior->iid_capable(); }
  void sample_iid(RngNode& rng, std::span<double> out) const override {
    auto hyper = out.first(n_hyper_);
    spec_.hyper_prior->sample_iid(rng, hyper);
    const DensityModel cond = conditional(hyper);
    cond->sample_iid(rng, out.subspan(n_hyper_));
  }
  bool differentiable() const noexcept override { return false; }

 protected:
  double eval(std::span<const double> x) const override {
    const auto hyper = x.first(n_hyper_);
    const double lh = spec_.hyper_prior->log_density(hyper);
    if (lh == kNegInf) return lh;
    const DensityModel cond = conditional(hyper);
    if (!cond) return kNegInf;
    return lh + cond->log_density(x.subspan(n_hyper_));
  }

 private:
  DensityModel conditional(std::span<const double> hyper) const {
    DensityModel cond = spec_.conditional(hyper);
    if (cond && cond->dims() != dims() - n_hyper_) {
      throw ContractViolation("hierarchical conditional has the wrong dimension");
    }
    return cond;
  }

  HierarchicalPriorSpec spec_;
  std::size_t n_hyper_;
};

}  // namespace

DensityModel make_function_density(FunctionDensitySpec spec) {
  return std::make_shared<FunctionDensity>(std::move(spec));
}

DensityModel make_uniform_prior(std::vector<double> lower, std::vector<double> upper,
                                std::vector<std::string> names) {
  return std::make_shared<UniformPrior>(
      ParameterSpace::box(std::move(lower), std::move(upper), std::move(names)));
}

DensityModel make_lognormal(double mu, double sigma) {
  return std::make_shared<LogNormal>(mu, sigma);
}

DensityModel make_product(std::vector<DensityModel> components) {
  return std::make_shared<ProductDensity>(std::move(components));
}

DensityModel build_posterior(const DensityModel& likelihood, const DensityModel& prior) {
  if (!likelihood || !prior) throw ContractViolation("posterior needs likelihood and prior");
  if (likelihood->space().lower != prior->space().lower ||
      likelihood->space().upper != prior->space().upper) {
    throw ContractViolation("likelihood and prior live on different parameter spaces");
  }
  return std::make_shared<PosteriorDensity>(likelihood, prior);
}

DensityModel make_hierarchical_prior(HierarchicalPriorSpec spec) {
  if (!spec.hyper_prior) throw ContractViolation("hierarchical prior needs a hyper prior");
  return std::make_shared<HierarchicalPrior>(std::move(spec));
}

SampleBatch prior_iid_sample(const Density& prior, RngNode& rng, std::size_t n) {
  if (!prior.iid_capable()) throw UnsupportedOperation("density does not support iid sampling");
  SampleBatch batch(prior.dims());
  batch.reserve(n);
  std::vector<double> x(prior.dims());
  for (std::size_t i = 0; i < n; ++i) {
    prior.sample_iid(rng, x);
    batch.push_back(x, 1.0, prior.log_density(x), 0, i);
  }
  return batch;
}

}  // namespace baton
