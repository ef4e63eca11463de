#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mqms/core.hpp"

namespace mqms {

/// Nonnegative integer normal with gcd of its nonzero entries equal to 1.
class WeightVector {
 public:
  /// Divides by the gcd of the entries. Throws on the zero vector.
  static WeightVector normalized(std::vector<Count> entries);

  [[nodiscard]] std::span<const Count> entries() const noexcept { return entries_; }
  [[nodiscard]] std::size_t size() const noexcept { return entries_.size(); }
  [[nodiscard]] Count operator[](std::size_t i) const { return entries_[i]; }
  [[nodiscard]] RateVector as_rates() const;

  friend auto operator<=>(const WeightVector&, const WeightVector&) = default;

 private:
  explicit WeightVector(std::vector<Count> e) : entries_(std::move(e)) {}
  std::vector<Count> entries_;
};

/// Distinct products of N-1 factors drawn from {0..M}, sorted ascending.
std::vector<Count> weight_values(std::size_t queues, Count max_rate);

/// Size of the weight set when products are counted as multisets of factors
/// (binomial(M+N-2, N-1) + 1). Larger than the distinct count whenever two
/// factor multisets share a product, e.g. 1*4 = 2*2.
Count multiset_weight_count(std::size_t queues, Count max_rate);

/// Ratio-graph connectivity test for membership in the set of facet-capable
/// normals: two nonzero coordinates are adjacent when their ratio equals m/n
/// for some nonzero m, n <= M.
bool in_v(std::span<const Count> alpha, Count max_rate);
/// Float variant; ratios are compared with relative tolerance 1e-9.
bool in_v(std::span<const double> alpha, Count max_rate);

struct CandidateLimits {
  double max_enumerated = 1e7;
};

/// Normalized, deduplicated members of W^N \ {0} that pass `in_v`, sorted
/// lexicographically.
std::vector<WeightVector> candidate_weights(std::size_t queues, Count max_rate, CandidateLimits limits = {});

/// Counts reported alongside the candidate set.
struct CandidateCounts {
  std::size_t weight_set_size = 0;     ///< |W| (distinct products)
  std::size_t full_grid_minus_zero = 0;  ///< |W|^N - 1
  std::size_t normalized_distinct = 0;   ///< after gcd dedup, before the V filter
  std::size_t candidates = 0;            ///< |V-hat|
  Count multiset_weight_size = 0;        ///< |W| under multiset counting
  double multiset_grid_minus_zero = 0;   ///< (multiset |W|)^N - 1
};

CandidateCounts candidate_counts(std::size_t queues, Count max_rate, CandidateLimits limits = {});

/// sum_s pi_s sum_k max_n alpha_n C_s[n][k]: the best achievable weighted
/// service, evaluated server by server.
double facet_rhs(std::span<const double> alpha, const ChannelDistribution& dist, EnumerationLimits limits = {});

enum class NormalMode { VHat, FullWN };

struct PolytopeOptions {
  NormalMode normals = NormalMode::VHat;
  CandidateLimits candidate_limits{};
  EnumerationLimits enumeration_limits{};
};

RegionPolytope stability_polytope(const ChannelDistribution& dist, PolytopeOptions options = {});

/// Largest uniform increase d with lambda + d*1 still inside: min over
/// half-spaces of (b - <alpha, lambda>) / <alpha, 1>.
double margin(std::span<const double> lambda, const RegionPolytope& polytope);

/// K - sum_k prod_{n in subset} (1 - p[n][k]) for independent ON-OFF links.
double onoff_bernoulli_rhs(std::span<const std::size_t> subset, const Grid<double>& on_probability);

}  // namespace mqms
