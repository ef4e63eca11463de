#pragma once

#include <span>
#include <vector>

#include "mqms/core.hpp"

namespace mqms {

/// Fixed allocation per channel state, indexed like `enumerate_states`.
struct DeterministicPolicy {
  std::vector<AllocationMatrix> allocations;
};

/// Maximum Weight: each server goes to argmax_n X_n * C[n][k]. Ties go to the
/// lowest queue index; a server whose best weight is zero idles.
AllocationMatrix mw_allocate(std::span<const Count> backlog, const ChannelState& channel);

/// Same rule with real-valued weights alpha_n in place of backlogs.
AllocationMatrix max_weight_allocation(std::span<const double> weights, const ChannelState& channel);

/// Long-run service vector sum_s pi_s (C_s o I_s) 1.
RateVector policy_rate(const DeterministicPolicy& policy, const ChannelDistribution& dist,
                       EnumerationLimits limits = {});

/// Vertex of the rate region supported by direction alpha: the service vector
/// of the policy that maximises alpha-weighted service in every state.
RateVector vertex_for_direction(std::span<const double> alpha, const ChannelDistribution& dist,
                                EnumerationLimits limits = {});

}  // namespace mqms
