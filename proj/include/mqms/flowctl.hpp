#pragma once

#include <cstdint>
#include <string_view>
#include <variant>
#include <vector>

#include "mqms/core.hpp"
#include "mqms/sim.hpp"

namespace mqms {

/// f(r) = log(1 + beta r)
struct LogUtility {
  double beta = 1.0;
};

/// f(r) = c r
struct LinearUtility {
  double slope = 1.0;
};

using Utility = std::variant<LogUtility, LinearUtility>;
using UtilitySpec = std::vector<Utility>;

double utility_value(const Utility& f, double r);
double utility_derivative(const Utility& f, double r);
bool is_linear(const Utility& f);

/// sum_n f_n(r_n)
double total_utility(const UtilitySpec& spec, std::span<const double> rates);

/// Parses "log:10,linear:10".
UtilitySpec parse_utilities(std::string_view text);
std::string format_utilities(const UtilitySpec& spec);

/// Admission gate: min(available, R_max) when eta * Y > X, else 0.
double admit(double available, double backlog_prev, double virtual_prev, double eta, double r_max);

/// Maximiser of V f(g) - eta Y g over [0, R_max].
double aux_gamma(const Utility& f, double V, double eta, double virtual_prev, double r_max);

/// Virtual cost queue update (Y - r)^+ + gamma.
double virtual_step(double virtual_prev, double admitted, double gamma);

struct FlowParams {
  double eta = 1.0;
  double V = 100.0;
  RateVector r_max;  ///< per queue
  std::uint64_t slots = 1;
  std::uint64_t seed = 1;
  bool record_trace = false;
};

struct FlowTrace {
  std::size_t queues = 0;
  std::vector<std::uint64_t> slot;
  std::vector<Count> backlog;        ///< X(t)
  std::vector<double> virtual_queue; ///< Y(t)
  std::vector<double> transport;     ///< L(t)
  std::vector<Count> admitted;       ///< r(t)
  std::vector<double> gamma;

  friend bool operator==(const FlowTrace&, const FlowTrace&) = default;
};

struct FlowResult {
  RateVector avg_admitted;      ///< r-bar
  double utility = 0.0;         ///< f(r-bar)
  double avg_total_occupancy = 0.0;
  RateVector avg_virtual;       ///< time-averaged Y
  RateVector avg_gamma;
  QueueVector final_backlog;
  RateVector final_virtual;
  RateVector final_transport;
  FlowTrace trace;
};

/// Cross-layer control with virtual cost queues on top of MW scheduling.
FlowResult clc2b_run(const ChannelDistribution& dist, const ArrivalSpec& arrivals, const UtilitySpec& utilities,
                     const FlowParams& params);

}  // namespace mqms
