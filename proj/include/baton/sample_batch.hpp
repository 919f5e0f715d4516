#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace baton {

/// Columnar store of weighted samples with chain/step provenance.
///
/// Variates are row-major, `size() x dims()`. Weights are repetition counts
/// for Metropolis-type samplers and 1 for iid draws.
class SampleBatch {
 public:
  SampleBatch() = default;
  explicit SampleBatch(std::size_t dims) : dims_(dims) {}

  std::size_t dims() const noexcept { return dims_; }
  std::size_t size() const noexcept { return weights_.size(); }
  bool empty() const noexcept { return weights_.empty(); }

  void reserve(std::size_t n);
  void push_back(std::span<const double> variate, double weight, double log_density,
                 std::uint64_t chain_id, std::uint64_t step);
  void append(const SampleBatch& other);

  std::span<const double> row(std::size_t i) const {
    return {variates_.data() + i * dims_, dims_};
  }
  double value(std::size_t i, std::size_t k) const { return variates_[i * dims_ + k]; }

  const std::vector<double>& variates() const noexcept { return variates_; }
  const std::vector<double>& weights() const noexcept { return weights_; }
  const std::vector<double>& log_densities() const noexcept { return log_densities_; }
  const std::vector<std::uint64_t>& chain_ids() const noexcept { return chain_ids_; }
  const std::vector<std::uint64_t>& steps() const noexcept { return steps_; }

  /// Column k as a vector (unweighted view of the values).
  std::vector<double> column(std::size_t k) const;
  double total_weight() const noexcept;
  /// Sorted distinct chain ids.
  std::vector<std::uint64_t> chain_list() const;
  /// Rows of one chain in stored order.
  SampleBatch select_chain(std::uint64_t chain_id) const;
  /// Index of the row with the largest log-density (first one on ties).
  std::size_t argmax_log_density() const;

  /// Throws ContractViolation if rows are non-finite, weights are not positive
  /// or a chain's steps are not increasing.
  void validate() const;

  friend bool operator==(const SampleBatch&, const SampleBatch&) = default;

 private:
  std::size_t dims_ = 0;
  std::vector<double> variates_;
  std::vector<double> weights_;
  std::vector<double> log_densities_;
  std::vector<std::uint64_t> chain_ids_;
  std::vector<std::uint64_t> steps_;
};

}  // namespace baton
