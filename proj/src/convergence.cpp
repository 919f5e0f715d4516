#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "baton/diagnostics.hpp"
#include "baton/error.hpp"

namespace baton {

namespace {

struct ChainMoments {
  Eigen::Index m = 0;
  Eigen::Index n = 0;
  Eigen::MatrixXd means;  // d x m
};

ChainMoments moments(const std::vector<Eigen::MatrixXd>& chains) {
  if (chains.size() < 2) throw ContractViolation("convergence tests need at least two chains");
  Eigen::Index n = chains.front().rows();
  for (const auto& c : chains) n = std::min(n, c.rows());
  if (n < 2) throw ContractViolation("convergence tests need at least two samples per chain");
  const Eigen::Index d = chains.front().cols();
  ChainMoments mo;
  mo.m = static_cast<Eigen::Index>(chains.size());
  mo.n = n;
  mo.means.resize(d, mo.m);
  for (Eigen::Index i = 0; i < mo.m; ++i) {
    const auto& c = chains[static_cast<std::size_t>(i)];
    if (c.cols() != d) throw ContractViolation("chains have different dimensions");
    mo.means.col(i) = c.topRows(n).colwise().mean().transpose();
  }
  return mo;
}

}  // namespace

std::vector<Eigen::MatrixXd> split_chains(const SampleBatch& batch) {
  std::vector<Eigen::MatrixXd> out;
  const auto d = static_cast<Eigen::Index>(batch.dims());
  for (auto id : batch.chain_list()) {
    Eigen::Index rows = 0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      if (batch.chain_ids()[i] != id) continue;
      const double w = batch.weights()[i];
      if (w != std::floor(w) || w < 1.0) {
        throw ContractViolation("chain diagnostics need integer repetition weights");
      }
      rows += static_cast<Eigen::Index>(w);
    }
    Eigen::MatrixXd m(rows, d);
    Eigen::Index r = 0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      if (batch.chain_ids()[i] != id) continue;
      const auto reps = static_cast<Eigen::Index>(batch.weights()[i]);
      for (Eigen::Index j = 0; j < reps; ++j, ++r) {
        for (Eigen::Index k = 0; k < d; ++k) m(r, k) = batch.value(i, static_cast<std::size_t>(k));
      }
    }
    out.push_back(std::move(m));
  }
  return out;
}

double psrf(const std::vector<Eigen::MatrixXd>& chains, std::size_t k) {
  const ChainMoments mo = moments(chains);
  const auto col = static_cast<Eigen::Index>(k);
  if (col >= mo.means.rows()) throw ContractViolation("psrf coordinate out of range");
  const double m = static_cast<double>(mo.m);
  const double n = static_cast<double>(mo.n);

  double within = 0.0;
  for (Eigen::Index i = 0; i < mo.m; ++i) {
    const auto x = chains[static_cast<std::size_t>(i)].col(col).head(mo.n);
    within += (x.array() - mo.means(col, i)).square().sum();
  }
  within /= m * (n - 1.0);
  if (!(within > 0.0)) {
    throw NumericalError("psrf: within-chain variance is zero in coordinate " + std::to_string(k));
  }
  const double grand = mo.means.row(col).mean();
  const double between = (mo.means.row(col).array() - grand).square().sum() / (m - 1.0);
  // V/W rearranged so that identical chains give exactly (n - 1)/n.
  return (n - 1.0) / n + between / within;
}

double mpsrf(const std::vector<Eigen::MatrixXd>& chains) {
  const ChainMoments mo = moments(chains);
  const double m = static_cast<double>(mo.m);
  const double n = static_cast<double>(mo.n);
  const Eigen::Index d = mo.means.rows();

  Eigen::MatrixXd within = Eigen::MatrixXd::Zero(d, d);
  for (Eigen::Index i = 0; i < mo.m; ++i) {
    const Eigen::MatrixXd centred =
        chains[static_cast<std::size_t>(i)].topRows(mo.n).rowwise() - mo.means.col(i).transpose();
    within.noalias() += centred.transpose() * centred;
  }
  within /= m * (n - 1.0);

  const Eigen::VectorXd grand = mo.means.rowwise().mean();
  const Eigen::MatrixXd dev = mo.means.colwise() - grand;
  const Eigen::MatrixXd between_over_n = dev * dev.transpose() / (m - 1.0);

  Eigen::LLT<Eigen::MatrixXd> llt(within);
  bool singular = llt.info() != Eigen::Success;
  if (!singular) {
    const Eigen::MatrixXd l = llt.matrixL();
    const double ratio = l.diagonal().minCoeff() / l.diagonal().maxCoeff();
    singular = !(ratio > 1e-12);
  }
  if (singular) {
    std::string dims;
    for (Eigen::Index k = 0; k < d; ++k) {
      if (!(within(k, k) > 0.0)) dims += (dims.empty() ? "" : ",") + std::to_string(k);
    }
    throw NumericalError("mpsrf: within-chain covariance is singular" +
                         (dims.empty() ? std::string(" (collinear coordinates)")
                                       : " in coordinates " + dims));
  }
  // Symmetrized problem: L^-1 (B/n) L^-T has the eigenvalues of W^-1 B/n.
  const auto lower = llt.matrixL();
  Eigen::MatrixXd c = lower.solve(between_over_n);
  c = lower.solve(c.transpose()).transpose();
  c = 0.5 * (c + c.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(c, Eigen::EigenvaluesOnly);
  const double lambda = std::max(0.0, eig.eigenvalues().maxCoeff());
  return (n - 1.0) / n + (m + 1.0) / m * lambda;
}

ConvergenceReport check_convergence(const std::vector<Eigen::MatrixXd>& chains,
                                    double threshold) {
  ConvergenceReport r;
  r.threshold = threshold;
  const auto d = chains.empty() ? 0 : static_cast<std::size_t>(chains.front().cols());
  r.psrf.resize(d);
  for (std::size_t k = 0; k < d; ++k) r.psrf[k] = psrf(chains, k);
  r.mpsrf = mpsrf(chains);
  const double worst = r.psrf.empty() ? 0.0 : *std::max_element(r.psrf.begin(), r.psrf.end());
  r.converged = worst <= threshold && r.mpsrf <= threshold;
  return r;
}

ConvergenceReport check_convergence(const SampleBatch& batch, double threshold) {
  return check_convergence(split_chains(batch), threshold);
}

}  // namespace baton
