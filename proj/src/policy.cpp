#include "mqms/policy.hpp"

#include <cmath>

namespace mqms {

using detail::require;

namespace {

// Index of the largest weight * rate in a column, or npos when that maximum is 0.
template <class Weight, class RateAt>
std::size_t column_winner(std::span<const Weight> weights, RateAt&& rate_at) {
  std::size_t best = static_cast<std::size_t>(-1);
  double best_value = 0.0;
  for (std::size_t n = 0; n < weights.size(); ++n) {
    const double v = static_cast<double>(weights[n]) * static_cast<double>(rate_at(n));
    if (v > best_value) {
      best_value = v;
      best = n;
    }
  }
  return best;
}

}  // namespace

AllocationMatrix mw_allocate(std::span<const Count> backlog, const ChannelState& channel) {
  require(backlog.size() == channel.queues(), "mw_allocate: backlog length must equal N");
  AllocationMatrix a(channel.queues(), channel.servers());
  for (std::size_t k = 0; k < channel.servers(); ++k) {
    // Exact integer comparison: doubles lose ties once X * C exceeds 2^53.
    std::size_t best = static_cast<std::size_t>(-1);
    unsigned __int128 best_value = 0;
    for (std::size_t n = 0; n < backlog.size(); ++n) {
      const unsigned __int128 v = static_cast<unsigned __int128>(backlog[n]) * channel.rate(n, k);
      if (v > best_value) {
        best_value = v;
        best = n;
      }
    }
    if (best != static_cast<std::size_t>(-1)) a.assign(k, best);
  }
  return a;
}

AllocationMatrix max_weight_allocation(std::span<const double> weights, const ChannelState& channel) {
  require(weights.size() == channel.queues(), "max_weight_allocation: weight length must equal N");
  AllocationMatrix a(channel.queues(), channel.servers());
  for (std::size_t k = 0; k < channel.servers(); ++k) {
    const auto n = column_winner(weights, [&](std::size_t q) { return channel.rate(q, k); });
    if (n != static_cast<std::size_t>(-1)) a.assign(k, n);
  }
  return a;
}

RateVector policy_rate(const DeterministicPolicy& policy, const ChannelDistribution& dist, EnumerationLimits limits) {
  const auto states = enumerate_states(dist, limits);
  require(policy.allocations.size() == states.size(), "policy_rate: policy must define an allocation for every state");
  RateVector rate(dist.dims().queues, 0.0);
  for (std::size_t s = 0; s < states.size(); ++s) {
    const auto served = offered_service(states[s].state, policy.allocations[s]);
    for (std::size_t n = 0; n < rate.size(); ++n) rate[n] += states[s].probability * static_cast<double>(served[n]);
  }
  return rate;
}

RateVector vertex_for_direction(std::span<const double> alpha, const ChannelDistribution& dist,
                                EnumerationLimits limits) {
  const auto& dims = dist.dims();
  require(alpha.size() == dims.queues, "vertex_for_direction: alpha length must equal N");
  bool nonzero = false;
  for (double a : alpha) {
    require(std::isfinite(a) && a >= 0.0, "vertex_for_direction: alpha must be finite and nonnegative");
    nonzero = nonzero || a > 0.0;
  }
  require(nonzero, "vertex_for_direction: alpha must be nonzero");

  // The per-state argmax decomposes over servers, so the per-column marginal
  // suffices.
  RateVector rate(dims.queues, 0.0);
  for (std::size_t k = 0; k < dims.servers; ++k) {
    for (const auto& outcome : dist.column_outcomes(k, limits)) {
      const auto n = column_winner(alpha, [&](std::size_t q) { return outcome.rates[q]; });
      if (n != static_cast<std::size_t>(-1)) rate[n] += outcome.probability * static_cast<double>(outcome.rates[n]);
    }
  }
  return rate;
}

}  // namespace mqms
