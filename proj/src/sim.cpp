#include "mqms/sim.hpp"

#include <algorithm>
#include <cmath>

#include "mqms/parallel.hpp"

namespace mqms {

using detail::require;

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

std::size_t sample_cdf(std::span<const double> cdf, double u) {
  // cdf holds the partial sums of all but the last outcome
  return static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
}

std::vector<double> partial_sums_but_last(std::span<const double> probs) {
  std::vector<double> cdf;
  cdf.reserve(probs.size());
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < probs.size(); ++i) {
    acc += probs[i];
    cdf.push_back(acc);
  }
  return cdf;
}

double poisson_log_pmf(double mean, Count j) {
  return -mean + static_cast<double>(j) * std::log(mean) - std::lgamma(static_cast<double>(j) + 1.0);
}

}  // namespace

ArrivalSpec::ArrivalSpec(std::vector<ArrivalProcess> processes) : processes_(std::move(processes)) {
  require(!processes_.empty(), "arrival spec needs at least one queue");
  const std::size_t n = processes_.size();
  poisson_cdf_.resize(n);
  truncation_mass_.assign(n, 0.0);
  mean_.assign(n, 0.0);

  for (std::size_t q = 0; q < n; ++q) {
    std::visit(Overloaded{
                   [&](const BernoulliArrivals& b) {
                     require(std::isfinite(b.rate) && b.rate >= 0.0, "Bernoulli arrival rate must be >= 0");
                     require(b.batch >= 1, "Bernoulli batch size must be >= 1");
                     require(b.rate <= static_cast<double>(b.batch), "Bernoulli rate cannot exceed the batch size");
                     mean_[q] = b.rate;
                   },
                   [&](const TruncatedPoissonArrivals& p) {
                     require(std::isfinite(p.mean) && p.mean >= 0.0, "Poisson arrival mean must be >= 0");
                     auto& cdf = poisson_cdf_[q];
                     double acc = 0.0;
                     double mean = 0.0;
                     for (Count j = 0; j < p.cap; ++j) {
                       const double pj = p.mean == 0.0 ? (j == 0 ? 1.0 : 0.0) : std::exp(poisson_log_pmf(p.mean, j));
                       acc += pj;
                       mean += static_cast<double>(j) * pj;
                       cdf.push_back(acc);
                     }
                     // Tail above the cap, summed directly to avoid cancellation in 1 - cdf.
                     double tail = 0.0;
                     if (p.mean > 0.0) {
                       for (Count j = p.cap + 1;; ++j) {
                         const double pj = std::exp(poisson_log_pmf(p.mean, j));
                         tail += pj;
                         if (static_cast<double>(j) > p.mean && pj < 1e-300 + tail * 1e-17) break;
                       }
                     }
                     truncation_mass_[q] = tail;
                     mean_[q] = mean + static_cast<double>(p.cap) * std::max(0.0, 1.0 - acc);
                   },
                   [&](const DeterministicArrivals& d) {
                     require(!d.schedule.empty(), "deterministic schedule must be nonempty");
                     double total = 0.0;
                     for (Count c : d.schedule) total += static_cast<double>(c);
                     mean_[q] = total / static_cast<double>(d.schedule.size());
                   },
               },
               processes_[q]);
  }
}

double ArrivalSpec::mean_rate(std::size_t queue) const {
  require(queue < mean_.size(), "queue index out of range");
  return mean_[queue];
}

RateVector ArrivalSpec::mean_rates() const { return mean_; }

double ArrivalSpec::second_moment_bound() const {
  double bound = 0.0;
  for (const auto& p : processes_) {
    const double b = std::visit(Overloaded{
                                    [](const BernoulliArrivals& a) { return double(a.batch) * double(a.batch); },
                                    [](const TruncatedPoissonArrivals& a) { return a.mean + a.mean * a.mean; },
                                    [](const DeterministicArrivals& a) {
                                      const double m = double(*std::max_element(a.schedule.begin(), a.schedule.end()));
                                      return m * m;
                                    },
                                },
                                p);
    bound = std::max(bound, b);
  }
  return bound;
}

double ArrivalSpec::truncation_mass(std::size_t queue) const {
  require(queue < truncation_mass_.size(), "queue index out of range");
  return truncation_mass_[queue];
}

QueueVector ArrivalSpec::draw(std::uint64_t slot, Rng& rng) const {
  QueueVector a(processes_.size(), 0);
  for (std::size_t q = 0; q < processes_.size(); ++q) {
    a[q] = std::visit(Overloaded{
                          [&](const BernoulliArrivals& b) -> Count {
                            return rng.uniform() < b.rate / static_cast<double>(b.batch) ? b.batch : 0;
                          },
                          [&](const TruncatedPoissonArrivals&) -> Count {
                            return static_cast<Count>(sample_cdf(poisson_cdf_[q], rng.uniform()));
                          },
                          [&](const DeterministicArrivals& d) -> Count {
                            return d.schedule[static_cast<std::size_t>(slot % d.schedule.size())];
                          },
                      },
                      processes_[q]);
  }
  return a;
}

QueueVector draw_arrivals(const ArrivalSpec& spec, std::uint64_t slot, Rng& rng) { return spec.draw(slot, rng); }

ChannelSampler::ChannelSampler(const ChannelDistribution& dist) : dims_(dist.dims()), product_(dist.is_product_form()) {
  if (product_) {
    for (std::size_t n = 0; n < dims_.queues; ++n) {
      for (std::size_t k = 0; k < dims_.servers; ++k) link_cdf_.push_back(partial_sums_but_last(dist.link_pmf(n, k)));
    }
    return;
  }
  std::vector<double> probs;
  for (const auto& s : dist.states()) {
    probs.push_back(s.probability);
    states_.push_back(s.state);
  }
  state_cdf_ = partial_sums_but_last(probs);
}

ChannelSampler::Draw ChannelSampler::draw(Rng& rng) const {
  if (!product_) {
    const std::size_t s = sample_cdf(state_cdf_, rng.uniform());
    return {states_[s], s};
  }
  Grid<Count> g(dims_.queues, dims_.servers);
  std::size_t index = 0;
  for (std::size_t l = 0; l < link_cdf_.size(); ++l) {
    const std::size_t v = sample_cdf(link_cdf_[l], rng.uniform());
    g(l / dims_.servers, l % dims_.servers) = v;
    index = index * static_cast<std::size_t>(dims_.max_rate + 1) + v;
  }
  return {ChannelState(std::move(g)), index};
}

SimResult run(const ChannelDistribution& dist, const ArrivalSpec& arrivals, const SchedulingPolicy& policy,
              const SimConfig& config) {
  const auto& dims = dist.dims();
  require(config.slots >= 1, "simulation needs at least one slot");
  require(arrivals.queues() == dims.queues, "arrival spec must cover every queue");

  if (const auto* g = std::get_if<DeterministicPolicy>(&policy)) {
    const double states = dist.is_product_form() ? std::exp2(dist.log2_state_count())
                                                 : static_cast<double>(dist.states().size());
    require(static_cast<double>(g->allocations.size()) == states,
            "deterministic policy must define an allocation for every channel state");
  }

  QueueVector backlog = config.initial_backlog.empty() ? QueueVector(dims.queues, 0) : config.initial_backlog;
  require(backlog.size() == dims.queues, "initial backlog length must equal N");

  Rng rng(config.seed);
  const ChannelSampler sampler(dist);

  SimResult result;
  result.trace.queues = dims.queues;
  if (config.record_trace) {
    result.trace.slot.reserve(config.slots);
    for (auto* v : {&result.trace.backlog, &result.trace.arrivals, &result.trace.served}) {
      v->reserve(config.slots * dims.queues);
    }
  }

  unsigned __int128 occupancy = 0;
  std::vector<Count> served_total(dims.queues, 0);
  std::vector<Count> arrived_total(dims.queues, 0);

  for (std::uint64_t t = 1; t <= config.slots; ++t) {
    const auto channel = sampler.draw(rng);
    const QueueVector a = arrivals.draw(t, rng);
    const AllocationMatrix allocation =
        std::visit(Overloaded{
                       [&](const MaxWeightPolicy&) { return mw_allocate(backlog, channel.state); },
                       [&](const DeterministicPolicy& g) { return g.allocations[channel.index]; },
                   },
                   policy);
    auto outcome = step_detailed(backlog, channel.state, allocation, a);
    for (std::size_t n = 0; n < dims.queues; ++n) {
      occupancy += outcome.next[n];
      served_total[n] += outcome.served[n];
      arrived_total[n] += a[n];
    }
    if (config.record_trace) {
      auto& tr = result.trace;
      tr.slot.push_back(t);
      tr.backlog.insert(tr.backlog.end(), outcome.next.begin(), outcome.next.end());
      tr.arrivals.insert(tr.arrivals.end(), a.begin(), a.end());
      tr.served.insert(tr.served.end(), outcome.served.begin(), outcome.served.end());
    }
    backlog = std::move(outcome.next);
  }

  auto& st = result.stats;
  const double horizon = static_cast<double>(config.slots);
  st.horizon = config.slots;
  st.avg_total_occupancy = static_cast<double>(occupancy) / horizon;
  st.throughput.resize(dims.queues);
  st.arrival_rate.resize(dims.queues);
  for (std::size_t n = 0; n < dims.queues; ++n) {
    st.throughput[n] = static_cast<double>(served_total[n]) / horizon;
    st.arrival_rate[n] = static_cast<double>(arrived_total[n]) / horizon;
  }
  st.admitted_rate = st.arrival_rate;
  st.final_backlog = backlog;
  return result;
}

std::vector<SimStats> run_replications(const ChannelDistribution& dist, const ArrivalSpec& arrivals,
                                       const SchedulingPolicy& policy, const SimConfig& config,
                                       std::size_t replications, std::size_t jobs) {
  std::vector<SimStats> out(replications);
  parallel_for(replications, jobs, [&](std::size_t r) {
    SimConfig c = config;
    c.seed = derive_seed(config.seed, r);
    c.record_trace = false;
    out[r] = run(dist, arrivals, policy, c).stats;
  });
  return out;
}

double delay_bound(std::size_t queues, double second_moment_bound, Count max_rate, std::size_t servers,
                   double delta) {
  if (!(delta > 0.0)) throw DomainError("delay_bound: arrival vector not strictly interior (delta <= 0)");
  const double mk = static_cast<double>(max_rate) * static_cast<double>(servers);
  return (static_cast<double>(queues) * second_moment_bound + mk * mk) / (2.0 * delta);
}

}  // namespace mqms
