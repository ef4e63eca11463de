#include "mqms/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace mqms {

using detail::require;

namespace {

void check_pmf(std::span<const double> pmf, double tol, const std::string& what) {
  double total = 0.0;
  for (double p : pmf) {
    require(std::isfinite(p) && p >= 0.0, what + ": probabilities must be finite and nonnegative");
    total += p;
  }
  require(std::abs(total - 1.0) <= tol, what + ": probabilities must sum to 1 (got " + std::to_string(total) + ")");
}

void check_dims(const SystemDims& dims) {
  require(dims.queues >= 1 && dims.servers >= 1 && dims.max_rate >= 1, "system dims require N >= 1, K >= 1, M >= 1");
}

}  // namespace

ChannelState::ChannelState(Grid<Count> rates) : rates_(std::move(rates)) {
  require(rates_.rows() >= 1 && rates_.cols() >= 1, "channel state needs at least one queue and one server");
}

ChannelState ChannelState::from_rows(const std::vector<std::vector<Count>>& rows) {
  require(!rows.empty() && !rows.front().empty(), "channel state needs at least one queue and one server");
  Grid<Count> g(rows.size(), rows.front().size());
  for (std::size_t n = 0; n < rows.size(); ++n) {
    require(rows[n].size() == g.cols(), "channel state rows must have equal length");
    for (std::size_t k = 0; k < g.cols(); ++k) g(n, k) = rows[n][k];
  }
  return ChannelState(std::move(g));
}

Count ChannelState::max_entry() const noexcept {
  auto v = rates_.values();
  return v.empty() ? 0 : *std::max_element(v.begin(), v.end());
}

ChannelDistribution ChannelDistribution::explicit_states(SystemDims dims, std::vector<WeightedState> states) {
  check_dims(dims);
  require(!states.empty(), "explicit distribution needs at least one state");
  std::vector<double> probs;
  probs.reserve(states.size());
  for (const auto& s : states) {
    require(s.state.queues() == dims.queues && s.state.servers() == dims.servers,
            "explicit state dimensions do not match N x K");
    require(s.state.max_entry() <= dims.max_rate, "channel entry exceeds M");
    probs.push_back(s.probability);
  }
  check_pmf(probs, kProbabilityTolerance, "explicit distribution");
  ChannelDistribution d;
  d.dims_ = dims;
  d.product_ = false;
  d.states_ = std::move(states);
  return d;
}

ChannelDistribution ChannelDistribution::product_form(SystemDims dims, std::vector<std::vector<double>> link_pmfs) {
  check_dims(dims);
  require(link_pmfs.size() == dims.links(), "product form needs one pmf per (queue, server) link");
  for (std::size_t l = 0; l < link_pmfs.size(); ++l) {
    require(link_pmfs[l].size() == dims.max_rate + 1, "each link pmf must have M+1 entries");
    check_pmf(link_pmfs[l], kProbabilityTolerance, "link pmf " + std::to_string(l));
  }
  ChannelDistribution d;
  d.dims_ = dims;
  d.product_ = true;
  d.link_pmfs_ = std::move(link_pmfs);
  return d;
}

ChannelDistribution ChannelDistribution::bernoulli(const Grid<double>& on_probability) {
  SystemDims dims{on_probability.rows(), on_probability.cols(), 1};
  std::vector<std::vector<double>> pmfs;
  pmfs.reserve(dims.links());
  for (std::size_t n = 0; n < dims.queues; ++n) {
    for (std::size_t k = 0; k < dims.servers; ++k) {
      double p = on_probability(n, k);
      require(p >= 0.0 && p <= 1.0, "ON probability must lie in [0, 1]");
      pmfs.push_back({1.0 - p, p});
    }
  }
  return product_form(dims, std::move(pmfs));
}

std::span<const WeightedState> ChannelDistribution::states() const {
  require(!product_, "states() is only available for explicit distributions");
  return states_;
}

std::span<const double> ChannelDistribution::link_pmf(std::size_t queue, std::size_t server) const {
  require(product_, "link_pmf() is only available for product-form distributions");
  require(queue < dims_.queues && server < dims_.servers, "link index out of range");
  return link_pmfs_[queue * dims_.servers + server];
}

double ChannelDistribution::log2_state_count() const noexcept {
  if (!product_) return std::log2(static_cast<double>(states_.size()));
  return static_cast<double>(dims_.links()) * std::log2(static_cast<double>(dims_.max_rate + 1));
}

std::vector<ColumnOutcome> ChannelDistribution::column_outcomes(std::size_t server, EnumerationLimits limits) const {
  require(server < dims_.servers, "server index out of range");
  std::vector<ColumnOutcome> out;
  if (!product_) {
    out.reserve(states_.size());
    for (const auto& s : states_) {
      ColumnOutcome c{s.probability, std::vector<Count>(dims_.queues)};
      for (std::size_t n = 0; n < dims_.queues; ++n) c.rates[n] = s.state.rate(n, server);
      out.push_back(std::move(c));
    }
    return out;
  }

  const double log2_count = static_cast<double>(dims_.queues) * std::log2(static_cast<double>(dims_.max_rate + 1));
  if (log2_count > limits.max_log2_states) {
    throw StateSpaceTooLarge("column enumeration", log2_count, limits.max_log2_states);
  }
  const std::size_t radix = dims_.max_rate + 1;
  std::vector<Count> digits(dims_.queues, 0);
  while (true) {
    double p = 1.0;
    for (std::size_t n = 0; n < dims_.queues; ++n) p *= link_pmf(n, server)[digits[n]];
    out.push_back({p, digits});
    std::size_t pos = dims_.queues;
    while (pos > 0) {
      --pos;
      if (++digits[pos] < radix) break;
      digits[pos] = 0;
      if (pos == 0) return out;
    }
  }
}

std::vector<WeightedState> enumerate_states(const ChannelDistribution& dist, EnumerationLimits limits) {
  if (!dist.is_product_form()) {
    auto s = dist.states();
    return {s.begin(), s.end()};
  }
  const double log2_count = dist.log2_state_count();
  if (log2_count > limits.max_log2_states) {
    throw StateSpaceTooLarge("channel state enumeration", log2_count, limits.max_log2_states);
  }
  const auto& dims = dist.dims();
  const std::size_t links = dims.links();
  const std::size_t radix = dims.max_rate + 1;
  std::vector<WeightedState> out;
  out.reserve(static_cast<std::size_t>(std::llround(std::exp2(log2_count))));

  std::vector<Count> digits(links, 0);
  while (true) {
    Grid<Count> g(dims.queues, dims.servers);
    double p = 1.0;
    for (std::size_t l = 0; l < links; ++l) {
      const std::size_t n = l / dims.servers;
      const std::size_t k = l % dims.servers;
      g(n, k) = digits[l];
      p *= dist.link_pmf(n, k)[digits[l]];
    }
    out.push_back({p, ChannelState(std::move(g))});
    std::size_t pos = links;
    while (pos > 0) {
      --pos;
      if (++digits[pos] < radix) break;
      digits[pos] = 0;
      if (pos == 0) return out;
    }
  }
}

std::size_t product_state_index(const ChannelState& state, Count max_rate) {
  std::size_t index = 0;
  for (Count v : state.rates().values()) {
    require(v <= max_rate, "channel entry exceeds M");
    index = index * static_cast<std::size_t>(max_rate + 1) + static_cast<std::size_t>(v);
  }
  return index;
}

AllocationMatrix::AllocationMatrix(std::size_t queues, std::size_t servers) : queues_(queues), owner_(servers, kIdle) {}

AllocationMatrix AllocationMatrix::from_matrix(const Grid<std::uint8_t>& indicator) {
  AllocationMatrix a(indicator.rows(), indicator.cols());
  for (std::size_t k = 0; k < indicator.cols(); ++k) {
    for (std::size_t n = 0; n < indicator.rows(); ++n) {
      const auto v = indicator(n, k);
      require(v <= 1, "allocation entries must be 0 or 1");
      if (v == 1) {
        require(a.owner_[k] == kIdle, "allocation column " + std::to_string(k) + " assigns a server to more than one queue");
        a.owner_[k] = n;
      }
    }
  }
  return a;
}

void AllocationMatrix::assign(std::size_t server, std::size_t queue) {
  require(server < owner_.size() && queue < queues_, "allocation index out of range");
  owner_[server] = queue;
}

void AllocationMatrix::release(std::size_t server) {
  require(server < owner_.size(), "allocation index out of range");
  owner_[server] = kIdle;
}

std::optional<std::size_t> AllocationMatrix::owner(std::size_t server) const {
  require(server < owner_.size(), "allocation index out of range");
  if (owner_[server] == kIdle) return std::nullopt;
  return owner_[server];
}

bool AllocationMatrix::allocated(std::size_t queue, std::size_t server) const {
  return server < owner_.size() && owner_[server] == queue;
}

Grid<std::uint8_t> AllocationMatrix::to_matrix() const {
  Grid<std::uint8_t> g(queues_, owner_.size(), 0);
  for (std::size_t k = 0; k < owner_.size(); ++k) {
    if (owner_[k] != kIdle) g(owner_[k], k) = 1;
  }
  return g;
}

QueueVector offered_service(const ChannelState& channel, const AllocationMatrix& allocation) {
  require(channel.queues() == allocation.queues() && channel.servers() == allocation.servers(),
          "channel and allocation dimensions differ");
  QueueVector offered(channel.queues(), 0);
  for (std::size_t k = 0; k < channel.servers(); ++k) {
    if (auto n = allocation.owner(k)) offered[*n] += channel.rate(*n, k);
  }
  return offered;
}

StepOutcome step_detailed(std::span<const Count> backlog, const ChannelState& channel,
                          const AllocationMatrix& allocation, std::span<const Count> arrivals) {
  require(backlog.size() == channel.queues() && arrivals.size() == channel.queues(),
          "backlog, arrivals and channel must agree on N");
  const QueueVector offered = offered_service(channel, allocation);
  StepOutcome out{QueueVector(backlog.size()), QueueVector(backlog.size())};
  for (std::size_t n = 0; n < backlog.size(); ++n) {
    out.served[n] = std::min(backlog[n], offered[n]);
    out.next[n] = backlog[n] - out.served[n] + arrivals[n];
  }
  return out;
}

QueueVector step(std::span<const Count> backlog, const ChannelState& channel, const AllocationMatrix& allocation,
                 std::span<const Count> arrivals) {
  return step_detailed(backlog, channel, allocation, arrivals).next;
}

}  // namespace mqms
