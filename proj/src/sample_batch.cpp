#include "baton/sample_batch.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "baton/error.hpp"

namespace baton {

void SampleBatch::reserve(std::size_t n) {
  variates_.reserve(n * dims_);
  weights_.reserve(n);
  log_densities_.reserve(n);
  chain_ids_.reserve(n);
  steps_.reserve(n);
}

void SampleBatch::push_back(std::span<const double> variate, double weight, double log_density,
                            std::uint64_t chain_id, std::uint64_t step) {
  if (variate.size() != dims_) {
    throw ContractViolation("sample has " + std::to_string(variate.size()) +
                            " coordinates, batch expects " + std::to_string(dims_));
  }
  variates_.insert(variates_.end(), variate.begin(), variate.end());
  weights_.push_back(weight);
  log_densities_.push_back(log_density);
  chain_ids_.push_back(chain_id);
  steps_.push_back(step);
}

void SampleBatch::append(const SampleBatch& other) {
  if (other.empty()) return;
  if (empty() && dims_ == 0) dims_ = other.dims_;
  if (other.dims_ != dims_) throw ContractViolation("cannot append batches of different dimension");
  variates_.insert(variates_.end(), other.variates_.begin(), other.variates_.end());
  weights_.insert(weights_.end(), other.weights_.begin(), other.weights_.end());
  log_densities_.insert(log_densities_.end(), other.log_densities_.begin(),
                        other.log_densities_.end());
  chain_ids_.insert(chain_ids_.end(), other.chain_ids_.begin(), other.chain_ids_.end());
  steps_.insert(steps_.end(), other.steps_.begin(), other.steps_.end());
}

std::vector<double> SampleBatch::column(std::size_t k) const {
  std::vector<double> out(size());
  for (std::size_t i = 0; i < size(); ++i) out[i] = variates_[i * dims_ + k];
  return out;
}

double SampleBatch::total_weight() const noexcept {
  double total = 0.0;
  for (double w : weights_) total += w;
  return total;
}

std::vector<std::uint64_t> SampleBatch::chain_list() const {
  std::vector<std::uint64_t> ids = chain_ids_;
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

SampleBatch SampleBatch::select_chain(std::uint64_t chain_id) const {
  SampleBatch out(dims_);
  for (std::size_t i = 0; i < size(); ++i) {
    if (chain_ids_[i] == chain_id) {
      out.push_back(row(i), weights_[i], log_densities_[i], chain_ids_[i], steps_[i]);
    }
  }
  return out;
}

std::size_t SampleBatch::argmax_log_density() const {
  if (empty()) throw ContractViolation("argmax of an empty batch");
  return static_cast<std::size_t>(
      std::max_element(log_densities_.begin(), log_densities_.end()) - log_densities_.begin());
}

void SampleBatch::validate() const {
  for (double v : variates_) {
    if (!std::isfinite(v)) throw ContractViolation("batch contains a non-finite variate");
  }
  for (double w : weights_) {
    if (!(w > 0.0) || !std::isfinite(w)) throw ContractViolation("batch weights must be positive");
  }
  std::map<std::uint64_t, std::uint64_t> last_step;
  for (std::size_t i = 0; i < size(); ++i) {
    auto [it, inserted] = last_step.try_emplace(chain_ids_[i], steps_[i]);
    if (!inserted) {
      if (steps_[i] <= it->second) {
        throw ContractViolation("chain " + std::to_string(chain_ids_[i]) +
                                " has non-increasing step indices");
      }
      it->second = steps_[i];
    }
  }
}

}  // namespace baton
