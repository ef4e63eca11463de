#pragma once

#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "mqms/core.hpp"
#include "mqms/policy.hpp"
#include "mqms/rng.hpp"

namespace mqms {

/// With probability rate/batch a batch of `batch` packets arrives; mean `rate`.
struct BernoulliArrivals {
  double rate = 0.0;
  Count batch = 1;
};

/// Poisson(mean) with all mass above `cap` placed on `cap`.
struct TruncatedPoissonArrivals {
  double mean = 0.0;
  Count cap = 0;
};

/// schedule[t mod size] packets arrive in slot t.
struct DeterministicArrivals {
  std::vector<Count> schedule;
};

using ArrivalProcess = std::variant<BernoulliArrivals, TruncatedPoissonArrivals, DeterministicArrivals>;

class ArrivalSpec {
 public:
  explicit ArrivalSpec(std::vector<ArrivalProcess> processes);

  [[nodiscard]] std::size_t queues() const noexcept { return processes_.size(); }
  [[nodiscard]] const std::vector<ArrivalProcess>& processes() const noexcept { return processes_; }

  [[nodiscard]] double mean_rate(std::size_t queue) const;
  [[nodiscard]] RateVector mean_rates() const;
  /// A_max^2: bound on E[A_n^2] over all queues. Bernoulli uses batch^2,
  /// deterministic the squared largest batch, truncated Poisson mean + mean^2.
  [[nodiscard]] double second_moment_bound() const;
  /// Probability mass moved onto the cap (zero for non-Poisson queues).
  [[nodiscard]] double truncation_mass(std::size_t queue) const;

  /// Independent per-queue draws for slot `slot`.
  [[nodiscard]] QueueVector draw(std::uint64_t slot, Rng& rng) const;

 private:
  std::vector<ArrivalProcess> processes_;
  std::vector<std::vector<double>> poisson_cdf_;  // empty for non-Poisson queues
  std::vector<double> truncation_mass_;
  std::vector<double> mean_;
};

QueueVector draw_arrivals(const ArrivalSpec& spec, std::uint64_t slot, Rng& rng);

/// Draws i.i.d. channel states from a distribution by inverse CDF.
class ChannelSampler {
 public:
  explicit ChannelSampler(const ChannelDistribution& dist);

  struct Draw {
    ChannelState state;
    std::size_t index;  ///< position in `enumerate_states` order
  };
  Draw draw(Rng& rng) const;

 private:
  SystemDims dims_;
  bool product_;
  std::vector<double> state_cdf_;
  std::vector<ChannelState> states_;
  std::vector<std::vector<double>> link_cdf_;
};

struct MaxWeightPolicy {};
using SchedulingPolicy = std::variant<MaxWeightPolicy, DeterministicPolicy>;

struct SimConfig {
  std::uint64_t slots = 1;
  std::uint64_t seed = 1;
  QueueVector initial_backlog;  ///< empty means all zeros
  bool record_trace = false;
};

/// Flat per-slot record: backlog X(t) after the slot, arrivals A(t), served packets.
struct SimTrace {
  std::size_t queues = 0;
  std::vector<std::uint64_t> slot;
  std::vector<Count> backlog;
  std::vector<Count> arrivals;
  std::vector<Count> served;

  [[nodiscard]] std::size_t size() const noexcept { return slot.size(); }
  friend bool operator==(const SimTrace&, const SimTrace&) = default;
};

struct SimStats {
  std::uint64_t horizon = 0;
  double avg_total_occupancy = 0.0;   ///< (1/T) sum_t sum_n X_n(t)
  RateVector throughput;              ///< served packets per slot
  RateVector arrival_rate;            ///< arrived packets per slot
  RateVector admitted_rate;           ///< equal to arrival_rate without flow control
  QueueVector final_backlog;

  friend bool operator==(const SimStats&, const SimStats&) = default;
};

struct SimResult {
  SimTrace trace;
  SimStats stats;
};

SimResult run(const ChannelDistribution& dist, const ArrivalSpec& arrivals, const SchedulingPolicy& policy,
              const SimConfig& config);

/// Independent replications with seeds derive_seed(config.seed, r).
std::vector<SimStats> run_replications(const ChannelDistribution& dist, const ArrivalSpec& arrivals,
                                       const SchedulingPolicy& policy, const SimConfig& config,
                                       std::size_t replications, std::size_t jobs);

/// Upper bound on the time-averaged total occupancy under MW:
/// (N A_max^2 + (M K)^2) / (2 delta).
double delay_bound(std::size_t queues, double second_moment_bound, Count max_rate, std::size_t servers, double delta);

}  // namespace mqms
