#include "baton/test_densities.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/Cholesky>
#include <Eigen/Core>

namespace baton {

namespace {

constexpr double kLogTwoPi = 1.8378770664093454836;

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

class NormalDensity final : public Density {
 public:
  NormalDensity(std::vector<double> mean, const std::vector<double>& cov)
      : Density(ParameterSpace::unbounded(mean.size()), DensityRole::generic),
        mean_(Eigen::Map<const Eigen::VectorXd>(mean.data(), static_cast<Eigen::Index>(mean.size()))) {
    const auto d = static_cast<Eigen::Index>(mean.size());
    if (cov.size() != mean.size() * mean.size()) {
      throw ContractViolation("normal covariance must be dims x dims");
    }
    Eigen::MatrixXd c = Eigen::Map<const Eigen::MatrixXd>(cov.data(), d, d).transpose();
    if (!c.isApprox(c.transpose(), 1e-12)) throw ContractViolation("normal covariance is not symmetric");
    llt_.compute(c);
    if (llt_.info() != Eigen::Success) {
      throw ContractViolation("normal covariance is not positive definite");
    }
    chol_ = llt_.matrixL();
    variances_.resize(mean.size());
    for (Eigen::Index k = 0; k < d; ++k) variances_[static_cast<std::size_t>(k)] = c(k, k);
    log_norm_ = -0.5 * static_cast<double>(d) * kLogTwoPi;
    for (Eigen::Index k = 0; k < d; ++k) log_norm_ -= std::log(chol_(k, k));
  }

  bool iid_capable() const noexcept override { return true; }
  void sample_iid(RngNode& rng, std::span<double> out) const override {
    const auto d = mean_.size();
    Eigen::VectorXd z(d);
    for (Eigen::Index k = 0; k < d; ++k) z(k) = rng.normal();
    Eigen::Map<Eigen::VectorXd>(out.data(), d) = mean_ + chol_ * z;
  }
  bool has_gradient() const noexcept override { return true; }
  void gradient(std::span<const double> x, std::span<double> out) const override {
    const auto d = mean_.size();
    const Eigen::VectorXd r = Eigen::Map<const Eigen::VectorXd>(x.data(), d) - mean_;
    Eigen::Map<Eigen::VectorXd>(out.data(), d) = -llt_.solve(r);
  }
  std::optional<std::vector<double>> marginal_variances() const override { return variances_; }

 protected:
  double eval(std::span<const double> x) const override {
    const auto d = mean_.size();
    Eigen::VectorXd r = Eigen::Map<const Eigen::VectorXd>(x.data(), d) - mean_;
    chol_.triangularView<Eigen::Lower>().solveInPlace(r);
    return log_norm_ - 0.5 * r.squaredNorm();
  }

 private:
  Eigen::VectorXd mean_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  Eigen::MatrixXd chol_;
  std::vector<double> variances_;
  double log_norm_ = 0.0;
};

class MultiCauchyDensity final : public Density {
 public:
  MultiCauchyDensity(std::size_t dims, double mu, double sigma)
      : Density(ParameterSpace::unbounded(dims), DensityRole::generic), mu_(mu), sigma_(sigma) {
    if (!(sigma > 0.0)) throw ContractViolation("multi_cauchy sigma must be positive");
  }

  bool iid_capable() const noexcept override { return true; }
  void sample_iid(RngNode& rng, std::span<double> out) const override {
    for (auto& v : out) {
      const double centre = rng.uniform() < 0.5 ? mu_ : -mu_;
      v = rng.cauchy(centre, sigma_);
    }
  }
  bool has_gradient() const noexcept override { return true; }
  void gradient(std::span<const double> x, std::span<double> out) const override {
    for (std::size_t k = 0; k < x.size(); ++k) {
      const double z1 = (x[k] - mu_) / sigma_;
      const double z2 = (x[k] + mu_) / sigma_;
      const double c1 = 1.0 / (1.0 + z1 * z1);
      const double c2 = 1.0 / (1.0 + z2 * z2);
      const double dc1 = -2.0 * z1 / sigma_ * c1 * c1;
      const double dc2 = -2.0 * z2 / sigma_ * c2 * c2;
      out[k] = (dc1 + dc2) / (c1 + c2);
    }
  }

 protected:
  double eval(std::span<const double> x) const override {
    double total = 0.0;
    const double log_norm = std::log(0.5 / (std::numbers::pi * sigma_));
    for (double v : x) {
      const double z1 = (v - mu_) / sigma_;
      const double z2 = (v + mu_) / sigma_;
      total += log_norm + std::log(1.0 / (1.0 + z1 * z1) + 1.0 / (1.0 + z2 * z2));
    }
    return total;
  }

 private:
  double mu_;
  double sigma_;
};

class FunnelDensity final : public Density {
 public:
  FunnelDensity(std::size_t dims, double a, double b)
      : Density(ParameterSpace::unbounded(dims), DensityRole::generic), a_(a), b_(b) {
    if (dims < 2) throw ContractViolation("funnel needs at least 2 dimensions");
    if (!(a > 0.0)) throw ContractViolation("funnel a must be positive");
  }

  bool iid_capable() const noexcept override { return true; }
  void sample_iid(RngNode& rng, std::span<double> out) const override {
    out[0] = a_ * rng.normal();
    const double scale = std::exp(b_ * out[0]);
    for (std::size_t k = 1; k < out.size(); ++k) out[k] = scale * rng.normal();
  }
  bool has_gradient() const noexcept override { return true; }
  void gradient(std::span<const double> x, std::span<double> out) const override {
    const double inv_var = std::exp(-2.0 * b_ * x[0]);
    double g0 = -x[0] / (a_ * a_);
    for (std::size_t k = 1; k < x.size(); ++k) {
      g0 += -b_ + b_ * x[k] * x[k] * inv_var;
      out[k] = -x[k] * inv_var;
    }
    out[0] = g0;
  }
  std::optional<std::vector<double>> marginal_variances() const override {
    std::vector<double> v(dims(), std::exp(2.0 * b_ * b_ * a_ * a_));
    v[0] = a_ * a_;
    return v;
  }

 protected:
  double eval(std::span<const double> x) const override {
    const double n_cond = static_cast<double>(x.size() - 1);
    const double inv_var = std::exp(-2.0 * b_ * x[0]);
    double sq = 0.0;
    for (std::size_t k = 1; k < x.size(); ++k) sq += x[k] * x[k];
    return -0.5 * x[0] * x[0] / (a_ * a_) - 0.5 * kLogTwoPi - std::log(a_) +
           n_cond * (-0.5 * kLogTwoPi - b_ * x[0]) - 0.5 * sq * inv_var;
  }

 private:
  double a_;
  double b_;
};

std::vector<double> cycle_defaults(const std::vector<double>& pattern, std::size_t dims) {
  std::vector<double> out(dims);
  for (std::size_t k = 0; k < dims; ++k) out[k] = pattern[k % pattern.size()];
  return out;
}

std::vector<double> json_vector(const nlohmann::json& j, const char* key, std::size_t dims) {
  auto v = j.at(key).get<std::vector<double>>();
  if (v.size() != dims) {
    throw ContractViolation(std::string("parameter '") + key + "' must have " +
                            std::to_string(dims) + " entries");
  }
  return v;
}

// Integrates N(t|0,a^2) * Phi(x / exp(b t)) over t with the trapezoid rule.
double funnel_conditional_cdf(double x, double a, double b) {
  constexpr int kNodes = 4001;
  const double lo = -10.0 * a, hi = 10.0 * a;
  const double h = (hi - lo) / (kNodes - 1);
  double sum = 0.0;
  for (int i = 0; i < kNodes; ++i) {
    const double t = lo + h * i;
    const double w = (i == 0 || i == kNodes - 1) ? 0.5 : 1.0;
    const double pdf = std::exp(-0.5 * t * t / (a * a)) / (a * std::sqrt(2.0 * std::numbers::pi));
    sum += w * pdf * normal_cdf(x * std::exp(-b * t));
  }
  return sum * h;
}

}  // namespace

DensityModel make_normal(std::vector<double> mean, std::vector<double> cov) {
  return std::make_shared<NormalDensity>(std::move(mean), cov);
}

DensityModel make_multi_cauchy(std::size_t dims, double mu, double sigma) {
  return std::make_shared<MultiCauchyDensity>(dims, mu, sigma);
}

DensityModel make_funnel(std::size_t dims, double a, double b) {
  return std::make_shared<FunnelDensity>(dims, a, b);
}

TestTarget make_test_target(const nlohmann::json& description) {
  if (!description.is_object() || !description.contains("name")) {
    throw ContractViolation("test density description needs a 'name'");
  }
  const auto name = description.at("name").get<std::string>();
  const auto dims = description.value("dims", std::size_t{2});
  if (dims < 1) throw ContractViolation("test density needs dims >= 1");

  TestTarget t;
  t.name = name;
  t.params = {{"name", name}, {"dims", dims}};

  if (name == "normal") {
    auto mu = description.contains("mu") ? json_vector(description, "mu", dims)
                                         : cycle_defaults({15.0, 10.0}, dims);
    std::vector<double> cov(dims * dims, 0.0);
    if (description.contains("cov")) {
      const auto rows = description.at("cov").get<std::vector<std::vector<double>>>();
      if (rows.size() != dims) throw ContractViolation("normal 'cov' must be dims x dims");
      for (std::size_t i = 0; i < dims; ++i) {
        if (rows[i].size() != dims) throw ContractViolation("normal 'cov' must be dims x dims");
        for (std::size_t j = 0; j < dims; ++j) cov[i * dims + j] = rows[i][j];
      }
      t.params["cov"] = rows;
    } else {
      auto var = description.contains("var") ? json_vector(description, "var", dims)
                                             : cycle_defaults({2.25, 6.25}, dims);
      for (std::size_t k = 0; k < dims; ++k) cov[k * dims + k] = var[k];
      t.params["var"] = var;
    }
    t.params["mu"] = mu;
    std::vector<double> var(dims);
    for (std::size_t k = 0; k < dims; ++k) var[k] = cov[k * dims + k];
    t.model = make_normal(mu, cov);
    t.mode = mu;
    t.mean = mu;
    t.variance = var;
    t.marginal_cdf = [mu, var](std::size_t k, double x) {
      return normal_cdf((x - mu[k]) / std::sqrt(var[k]));
    };
  } else if (name == "multi_cauchy") {
    const double mu = description.value("mu", 5.0);
    const double sigma = description.value("sigma", 1.0);
    t.params["mu"] = mu;
    t.params["sigma"] = sigma;
    t.model = make_multi_cauchy(dims, mu, sigma);
    // Each factor peaks marginally inside +-mu; refine numerically from +mu.
    const auto& model = t.model;
    double m = mu;
    for (int it = 0; it < 100; ++it) {
      // Newton on d/dx log f with central differences of the analytic gradient.
      std::vector<double> x(dims, m), g(dims), gp(dims);
      model->gradient(x, g);
      const double h = 1e-6 * std::max(1.0, std::abs(m));
      std::vector<double> xp(dims, m + h);
      model->gradient(xp, gp);
      const double curvature = (gp[0] - g[0]) / h;
      if (curvature >= 0.0) break;
      const double step = -g[0] / curvature;
      m += step;
      if (std::abs(step) < 1e-14 * std::max(1.0, std::abs(m))) break;
    }
    t.mode.assign(dims, m);
    t.mean.assign(dims, 0.0);
    t.marginal_cdf = [mu, sigma](std::size_t, double x) {
      return 0.5 + 0.5 * (std::atan((x - mu) / sigma) + std::atan((x + mu) / sigma)) /
                       std::numbers::pi;
    };
  } else if (name == "funnel") {
    if (dims < 2) throw ContractViolation("funnel needs dims >= 2");
    const double a = description.value("a", 1.0);
    const double b = description.value("b", 1.0);
    t.params["a"] = a;
    t.params["b"] = b;
    t.model = make_funnel(dims, a, b);
    t.mode.assign(dims, 0.0);
    t.mode[0] = -static_cast<double>(dims - 1) * b * a * a;
    t.mean.assign(dims, 0.0);
    t.variance = t.model->marginal_variances();
    t.marginal_cdf = [a, b](std::size_t k, double x) {
      if (k == 0) return normal_cdf(x / a);
      return funnel_conditional_cdf(x, a, b);
    };
  } else {
    throw ContractViolation("unknown test density '" + name + "'");
  }
  return t;
}

DensityModel make_test_density(const std::string& name, std::size_t dims,
                               const nlohmann::json& params) {
  nlohmann::json d = params.is_object() ? params : nlohmann::json::object();
  d["name"] = name;
  d["dims"] = dims;
  return make_test_target(d).model;
}

}  // namespace baton
