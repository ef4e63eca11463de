#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "mqms/error.hpp"

namespace mqms {

using Count = std::uint64_t;
using QueueVector = std::vector<Count>;
using RateVector = std::vector<double>;

/// Number of queues N, servers K and the largest per-link rate M.
struct SystemDims {
  std::size_t queues = 0;
  std::size_t servers = 0;
  Count max_rate = 0;

  [[nodiscard]] std::size_t links() const noexcept { return queues * servers; }
  friend bool operator==(const SystemDims&, const SystemDims&) = default;
};

/// Dense row-major matrix.
template <class T>
class Grid {
 public:
  Grid() = default;
  Grid(std::size_t rows, std::size_t cols, T fill = T{}) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
  [[nodiscard]] std::size_t cols() const noexcept { return cols_; }

  T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  [[nodiscard]] std::span<const T> values() const noexcept { return data_; }
  [[nodiscard]] std::span<T> values() noexcept { return data_; }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

/// N x K matrix of link rates C[n][k] in packets per slot.
class ChannelState {
 public:
  ChannelState() = default;
  explicit ChannelState(Grid<Count> rates);
  static ChannelState from_rows(const std::vector<std::vector<Count>>& rows);

  [[nodiscard]] std::size_t queues() const noexcept { return rates_.rows(); }
  [[nodiscard]] std::size_t servers() const noexcept { return rates_.cols(); }
  [[nodiscard]] Count rate(std::size_t queue, std::size_t server) const { return rates_(queue, server); }
  [[nodiscard]] const Grid<Count>& rates() const noexcept { return rates_; }
  [[nodiscard]] Count max_entry() const noexcept;

  friend bool operator==(const ChannelState&, const ChannelState&) = default;

 private:
  Grid<Count> rates_;
};

struct WeightedState {
  double probability = 0.0;
  ChannelState state;
};

/// One realisation of a single server's column C[.][k] with its probability.
struct ColumnOutcome {
  double probability = 0.0;
  std::vector<Count> rates;
};

/// Guards for enumerating the (M+1)^(NK) channel state space.
struct EnumerationLimits {
  double max_log2_states = 24.0;
};

/// Stationary distribution over channel states, either an explicit list of
/// weighted states or independent per-link pmfs over {0..M}.
class ChannelDistribution {
 public:
  static constexpr double kProbabilityTolerance = 1e-12;

  static ChannelDistribution explicit_states(SystemDims dims, std::vector<WeightedState> states);
  /// `link_pmfs[n * K + k]` is the pmf of C[n][k] over {0..M}.
  static ChannelDistribution product_form(SystemDims dims, std::vector<std::vector<double>> link_pmfs);
  /// Independent ON-OFF links: C[n][k] = 1 with probability p(n, k).
  static ChannelDistribution bernoulli(const Grid<double>& on_probability);

  [[nodiscard]] const SystemDims& dims() const noexcept { return dims_; }
  [[nodiscard]] bool is_product_form() const noexcept { return product_; }

  /// Explicit form only.
  [[nodiscard]] std::span<const WeightedState> states() const;
  /// Product form only.
  [[nodiscard]] std::span<const double> link_pmf(std::size_t queue, std::size_t server) const;

  [[nodiscard]] double log2_state_count() const noexcept;

  /// Marginal law of server k's column. Product form enumerates (M+1)^N
  /// combinations under the same guard as full enumeration.
  [[nodiscard]] std::vector<ColumnOutcome> column_outcomes(std::size_t server,
                                                           EnumerationLimits limits = {}) const;

 private:
  ChannelDistribution() = default;

  SystemDims dims_;
  bool product_ = false;
  std::vector<WeightedState> states_;
  std::vector<std::vector<double>> link_pmfs_;
};

/// Lists every channel state with its probability. Product-form states come in
/// lexicographic order of the row-major flattened matrix (last link fastest).
std::vector<WeightedState> enumerate_states(const ChannelDistribution& dist, EnumerationLimits limits = {});

/// Position of a state in the `enumerate_states` order of a product-form system.
std::size_t product_state_index(const ChannelState& state, Count max_rate);

/// Server-to-queue assignment. Column-validity holds by construction: each
/// server belongs to at most one queue.
class AllocationMatrix {
 public:
  AllocationMatrix() = default;
  AllocationMatrix(std::size_t queues, std::size_t servers);
  /// Builds from an N x K 0/1 matrix, rejecting columns with more than one 1.
  static AllocationMatrix from_matrix(const Grid<std::uint8_t>& indicator);

  void assign(std::size_t server, std::size_t queue);
  void release(std::size_t server);

  [[nodiscard]] std::optional<std::size_t> owner(std::size_t server) const;
  [[nodiscard]] bool allocated(std::size_t queue, std::size_t server) const;
  [[nodiscard]] Grid<std::uint8_t> to_matrix() const;

  [[nodiscard]] std::size_t queues() const noexcept { return queues_; }
  [[nodiscard]] std::size_t servers() const noexcept { return owner_.size(); }

  friend bool operator==(const AllocationMatrix&, const AllocationMatrix&) = default;

 private:
  static constexpr std::size_t kIdle = static_cast<std::size_t>(-1);

  std::size_t queues_ = 0;
  std::vector<std::size_t> owner_;
};

/// Per-queue service offered by an allocation: sum_k C[n][k] I[n][k].
QueueVector offered_service(const ChannelState& channel, const AllocationMatrix& allocation);

struct StepOutcome {
  QueueVector next;
  QueueVector served;
};

/// One slot of queue evolution: departures, truncated at zero, then arrivals.
StepOutcome step_detailed(std::span<const Count> backlog, const ChannelState& channel,
                          const AllocationMatrix& allocation, std::span<const Count> arrivals);

QueueVector step(std::span<const Count> backlog, const ChannelState& channel,
                 const AllocationMatrix& allocation, std::span<const Count> arrivals);

/// <alpha, r> <= bound.
struct HalfSpace {
  RateVector alpha;
  double bound = 0.0;

  friend bool operator==(const HalfSpace&, const HalfSpace&) = default;
};

enum class NormalSource { VHat, FullWN, Imported };

struct RegionPolytope {
  SystemDims dims;
  std::vector<HalfSpace> halfspaces;
  NormalSource source = NormalSource::VHat;

  friend bool operator==(const RegionPolytope&, const RegionPolytope&) = default;
};

}  // namespace mqms
