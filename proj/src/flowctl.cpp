#include "mqms/flowctl.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>
#include <string>

namespace mqms {

using detail::require;

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

double utility_value(const Utility& f, double r) {
  return std::visit(Overloaded{
                        [r](const LogUtility& u) { return std::log1p(u.beta * r); },
                        [r](const LinearUtility& u) { return u.slope * r; },
                    },
                    f);
}

double utility_derivative(const Utility& f, double r) {
  return std::visit(Overloaded{
                        [r](const LogUtility& u) { return u.beta / (1.0 + u.beta * r); },
                        [](const LinearUtility& u) { return u.slope; },
                    },
                    f);
}

bool is_linear(const Utility& f) { return std::holds_alternative<LinearUtility>(f); }

double total_utility(const UtilitySpec& spec, std::span<const double> rates) {
  require(spec.size() == rates.size(), "utility spec and rate vector differ in length");
  double total = 0.0;
  for (std::size_t n = 0; n < spec.size(); ++n) total += utility_value(spec[n], rates[n]);
  return total;
}

UtilitySpec parse_utilities(std::string_view text) {
  UtilitySpec out;
  while (!text.empty()) {
    const auto comma = text.find(',');
    const auto item = trim(text.substr(0, comma));
    text = comma == std::string_view::npos ? std::string_view{} : text.substr(comma + 1);

    const auto colon = item.find(':');
    if (colon == std::string_view::npos) throw ConfigError("utility '" + std::string(item) + "' must look like kind:param");
    const auto kind = trim(item.substr(0, colon));
    const auto param_text = trim(item.substr(colon + 1));
    double param = 0.0;
    const auto [ptr, ec] = std::from_chars(param_text.data(), param_text.data() + param_text.size(), param);
    if (ec != std::errc{} || ptr != param_text.data() + param_text.size() || !(param > 0.0)) {
      throw ConfigError("utility '" + std::string(item) + "' needs a positive numeric parameter");
    }
    if (kind == "log") {
      out.emplace_back(LogUtility{param});
    } else if (kind == "linear") {
      out.emplace_back(LinearUtility{param});
    } else {
      throw ConfigError("unknown utility kind '" + std::string(kind) + "' (expected log or linear)");
    }
  }
  if (out.empty()) throw ConfigError("utility list is empty");
  return out;
}

std::string format_utilities(const UtilitySpec& spec) {
  std::ostringstream os;
  os.precision(17);
  for (std::size_t n = 0; n < spec.size(); ++n) {
    if (n) os << ',';
    std::visit(Overloaded{
                   [&](const LogUtility& u) { os << "log:" << u.beta; },
                   [&](const LinearUtility& u) { os << "linear:" << u.slope; },
               },
               spec[n]);
  }
  return os.str();
}

double admit(double available, double backlog_prev, double virtual_prev, double eta, double r_max) {
  return eta * virtual_prev > backlog_prev ? std::min(available, r_max) : 0.0;
}

double aux_gamma(const Utility& f, double V, double eta, double virtual_prev, double r_max) {
  require(V > 0.0, "aux_gamma: V must be positive");
  const double price = eta * virtual_prev;
  return std::visit(Overloaded{
                        [&](const LogUtility& u) {
                          if (price <= 0.0) return r_max;
                          return std::clamp(V / price - 1.0 / u.beta, 0.0, r_max);
                        },
                        [&](const LinearUtility& u) { return V * u.slope > price ? r_max : 0.0; },
                    },
                    f);
}

double virtual_step(double virtual_prev, double admitted, double gamma) {
  return std::max(0.0, virtual_prev - admitted) + gamma;
}

FlowResult clc2b_run(const ChannelDistribution& dist, const ArrivalSpec& arrivals, const UtilitySpec& utilities,
                     const FlowParams& params) {
  const auto& dims = dist.dims();
  const std::size_t n_q = dims.queues;
  require(arrivals.queues() == n_q && utilities.size() == n_q, "arrivals and utilities must cover every queue");
  require(params.r_max.size() == n_q, "R_max must be given per queue");
  require(params.eta > 0.0 && params.eta <= 1.0, "eta must lie in (0, 1]");
  require(params.V > 0.0, "V must be positive");
  require(params.slots >= 1, "flow control run needs at least one slot");
  for (double r : params.r_max) require(r >= 0.0, "R_max must be nonnegative");

  Rng rng(params.seed);
  const ChannelSampler sampler(dist);

  QueueVector backlog(n_q, 0);
  RateVector virtual_queue(n_q, 0.0);
  RateVector transport(n_q, 0.0);
  QueueVector admitted(n_q, 0);

  std::vector<Count> admitted_total(n_q, 0);
  RateVector virtual_sum(n_q, 0.0);
  RateVector gamma_sum(n_q, 0.0);
  unsigned __int128 occupancy = 0;

  FlowResult result;
  auto& tr = result.trace;
  tr.queues = n_q;

  for (std::uint64_t t = 1; t <= params.slots; ++t) {
    const auto channel = sampler.draw(rng);
    const QueueVector a = arrivals.draw(t, rng);

    RateVector gamma(n_q);
    for (std::size_t n = 0; n < n_q; ++n) {
      const double available = transport[n] + static_cast<double>(a[n]);
      const double r = admit(available, static_cast<double>(backlog[n]), virtual_queue[n], params.eta, params.r_max[n]);
      admitted[n] = static_cast<Count>(std::floor(r));
      transport[n] = available - static_cast<double>(admitted[n]);

      gamma[n] = aux_gamma(utilities[n], params.V, params.eta, virtual_queue[n], params.r_max[n]);
      virtual_queue[n] = virtual_step(virtual_queue[n], static_cast<double>(admitted[n]), gamma[n]);
    }

    // MW observes X(t-1); admitted packets join at the end of the slot.
    const auto allocation = mw_allocate(backlog, channel.state);
    backlog = step(backlog, channel.state, allocation, admitted);

    for (std::size_t n = 0; n < n_q; ++n) {
      admitted_total[n] += admitted[n];
      virtual_sum[n] += virtual_queue[n];
      gamma_sum[n] += gamma[n];
      occupancy += backlog[n];
    }
    if (params.record_trace) {
      tr.slot.push_back(t);
      tr.backlog.insert(tr.backlog.end(), backlog.begin(), backlog.end());
      tr.virtual_queue.insert(tr.virtual_queue.end(), virtual_queue.begin(), virtual_queue.end());
      tr.transport.insert(tr.transport.end(), transport.begin(), transport.end());
      tr.admitted.insert(tr.admitted.end(), admitted.begin(), admitted.end());
      tr.gamma.insert(tr.gamma.end(), gamma.begin(), gamma.end());
    }
  }

  const double horizon = static_cast<double>(params.slots);
  result.avg_admitted.resize(n_q);
  result.avg_virtual.resize(n_q);
  result.avg_gamma.resize(n_q);
  for (std::size_t n = 0; n < n_q; ++n) {
    result.avg_admitted[n] = static_cast<double>(admitted_total[n]) / horizon;
    result.avg_virtual[n] = virtual_sum[n] / horizon;
    result.avg_gamma[n] = gamma_sum[n] / horizon;
  }
  result.utility = total_utility(utilities, result.avg_admitted);
  result.avg_total_occupancy = static_cast<double>(occupancy) / horizon;
  result.final_backlog = backlog;
  result.final_virtual = virtual_queue;
  result.final_transport = transport;
  return result;
}

}  // namespace mqms
