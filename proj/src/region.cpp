#include "mqms/region.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <string>

namespace mqms {

using detail::require;

namespace {

template <class T, class Adjacent>
bool support_connected(std::span<const T> alpha, Adjacent&& adjacent) {
  std::vector<std::size_t> support;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    if (alpha[i] != T{}) support.push_back(i);
  }
  require(!support.empty(), "in_v: alpha must not be the zero vector");

  std::vector<bool> reached(support.size(), false);
  std::vector<std::size_t> frontier{0};
  reached[0] = true;
  std::size_t count = 1;
  while (!frontier.empty()) {
    const std::size_t u = frontier.back();
    frontier.pop_back();
    for (std::size_t v = 0; v < support.size(); ++v) {
      if (!reached[v] && adjacent(alpha[support[u]], alpha[support[v]])) {
        reached[v] = true;
        ++count;
        frontier.push_back(v);
      }
    }
  }
  return count == support.size();
}

// Visits every vector of values^N in lexicographic order.
template <class Visit>
void for_each_grid_point(std::span<const Count> values, std::size_t dims, Visit&& visit) {
  std::vector<std::size_t> digit(dims, 0);
  std::vector<Count> point(dims, values.front());
  while (true) {
    visit(std::as_const(point));
    std::size_t pos = dims;
    while (true) {
      if (pos == 0) return;
      --pos;
      if (++digit[pos] < values.size()) {
        point[pos] = values[digit[pos]];
        break;
      }
      digit[pos] = 0;
      point[pos] = values.front();
    }
  }
}

void check_grid_size(std::size_t weights, std::size_t queues, CandidateLimits limits) {
  const double total = std::pow(static_cast<double>(weights), static_cast<double>(queues));
  if (total > limits.max_enumerated) throw StateSpaceTooLarge("W^N enumeration", total, limits.max_enumerated);
}

}  // namespace

WeightVector WeightVector::normalized(std::vector<Count> entries) {
  Count g = 0;
  for (Count e : entries) g = std::gcd(g, e);
  require(g != 0, "weight vector must not be zero");
  for (Count& e : entries) e /= g;
  return WeightVector(std::move(entries));
}

RateVector WeightVector::as_rates() const { return {entries_.begin(), entries_.end()}; }

std::vector<Count> weight_values(std::size_t queues, Count max_rate) {
  require(queues >= 2, "weight_values requires N >= 2");
  require(max_rate >= 1, "weight_values requires M >= 1");
  std::set<Count> products{1};
  for (std::size_t j = 0; j + 1 < queues; ++j) {
    std::set<Count> next;
    for (Count p : products) {
      for (Count m = 0; m <= max_rate; ++m) {
        if (m != 0 && p > std::numeric_limits<Count>::max() / m) throw DomainError("weight_values: product overflows 64 bits");
        next.insert(p * m);
      }
    }
    products = std::move(next);
  }
  return {products.begin(), products.end()};
}

Count multiset_weight_count(std::size_t queues, Count max_rate) {
  require(queues >= 2 && max_rate >= 1, "multiset_weight_count requires N >= 2, M >= 1");
  // binomial(M + N - 2, N - 1), computed incrementally to stay exact
  const Count n = max_rate + queues - 2;
  const Count k = queues - 1;
  Count c = 1;
  for (Count i = 1; i <= k; ++i) c = c * (n - k + i) / i;
  return c + 1;
}

bool in_v(std::span<const Count> alpha, Count max_rate) {
  require(max_rate >= 1, "in_v requires M >= 1");
  return support_connected(alpha, [max_rate](Count a, Count b) {
    const Count g = std::gcd(a, b);
    return a / g <= max_rate && b / g <= max_rate;
  });
}

bool in_v(std::span<const double> alpha, Count max_rate) {
  require(max_rate >= 1, "in_v requires M >= 1");
  for (double a : alpha) require(std::isfinite(a) && a >= 0.0, "in_v: alpha must be finite and nonnegative");
  return support_connected(alpha, [max_rate](double a, double b) {
    const double ratio = a / b;
    for (Count m = 1; m <= max_rate; ++m) {
      for (Count n = 1; n <= max_rate; ++n) {
        const double target = static_cast<double>(m) / static_cast<double>(n);
        if (std::abs(ratio - target) <= 1e-9 * std::max(ratio, target)) return true;
      }
    }
    return false;
  });
}

namespace {

std::set<WeightVector> normalized_grid(std::size_t queues, Count max_rate, CandidateLimits limits) {
  const auto w = weight_values(queues, max_rate);
  check_grid_size(w.size(), queues, limits);
  std::set<WeightVector> distinct;
  for_each_grid_point(w, queues, [&](const std::vector<Count>& point) {
    if (std::all_of(point.begin(), point.end(), [](Count c) { return c == 0; })) return;
    distinct.insert(WeightVector::normalized(point));
  });
  return distinct;
}

}  // namespace

std::vector<WeightVector> candidate_weights(std::size_t queues, Count max_rate, CandidateLimits limits) {
  std::vector<WeightVector> out;
  for (const auto& v : normalized_grid(queues, max_rate, limits)) {
    if (in_v(v.entries(), max_rate)) out.push_back(v);
  }
  return out;
}

CandidateCounts candidate_counts(std::size_t queues, Count max_rate, CandidateLimits limits) {
  CandidateCounts c;
  const auto w = weight_values(queues, max_rate);
  c.weight_set_size = w.size();
  c.full_grid_minus_zero = static_cast<std::size_t>(std::llround(std::pow(double(w.size()), double(queues)))) - 1;
  const auto grid = normalized_grid(queues, max_rate, limits);
  c.normalized_distinct = grid.size();
  c.candidates = static_cast<std::size_t>(
      std::count_if(grid.begin(), grid.end(), [&](const WeightVector& v) { return in_v(v.entries(), max_rate); }));
  c.multiset_weight_size = multiset_weight_count(queues, max_rate);
  c.multiset_grid_minus_zero = std::pow(double(c.multiset_weight_size), double(queues)) - 1.0;
  return c;
}

double facet_rhs(std::span<const double> alpha, const ChannelDistribution& dist, EnumerationLimits limits) {
  const auto& dims = dist.dims();
  require(alpha.size() == dims.queues, "facet_rhs: alpha length must equal N");
  for (double a : alpha) require(std::isfinite(a) && a >= 0.0, "facet_rhs: alpha must be finite and nonnegative");

  double total = 0.0;
  for (std::size_t k = 0; k < dims.servers; ++k) {
    for (const auto& outcome : dist.column_outcomes(k, limits)) {
      double best = 0.0;
      for (std::size_t n = 0; n < dims.queues; ++n) {
        best = std::max(best, alpha[n] * static_cast<double>(outcome.rates[n]));
      }
      total += outcome.probability * best;
    }
  }
  return total;
}

RegionPolytope stability_polytope(const ChannelDistribution& dist, PolytopeOptions options) {
  const auto& dims = dist.dims();
  RegionPolytope poly;
  poly.dims = dims;
  poly.source = options.normals == NormalMode::VHat ? NormalSource::VHat : NormalSource::FullWN;

  auto add = [&](RateVector alpha) {
    const double b = facet_rhs(alpha, dist, options.enumeration_limits);
    poly.halfspaces.push_back({std::move(alpha), b});
  };

  if (dims.queues == 1) {
    add({1.0});
    return poly;
  }

  if (options.normals == NormalMode::VHat) {
    for (const auto& w : candidate_weights(dims.queues, dims.max_rate, options.candidate_limits)) add(w.as_rates());
    return poly;
  }

  const auto w = weight_values(dims.queues, dims.max_rate);
  check_grid_size(w.size(), dims.queues, options.candidate_limits);
  for_each_grid_point(w, dims.queues, [&](const std::vector<Count>& point) {
    if (std::all_of(point.begin(), point.end(), [](Count c) { return c == 0; })) return;
    add(RateVector(point.begin(), point.end()));
  });
  return poly;
}

double margin(std::span<const double> lambda, const RegionPolytope& polytope) {
  require(!polytope.halfspaces.empty(), "margin: polytope has no half-spaces");
  require(lambda.size() == polytope.dims.queues, "margin: lambda length must equal N");
  for (double l : lambda) require(std::isfinite(l) && l >= 0.0, "margin: lambda must be finite and nonnegative");

  double best = std::numeric_limits<double>::infinity();
  for (const auto& h : polytope.halfspaces) {
    require(h.alpha.size() == lambda.size(), "margin: half-space dimension mismatch");
    double dot = 0.0;
    double norm1 = 0.0;
    for (std::size_t n = 0; n < lambda.size(); ++n) {
      dot += h.alpha[n] * lambda[n];
      norm1 += h.alpha[n];
    }
    require(norm1 > 0.0, "margin: half-space normal must be nonzero");
    best = std::min(best, (h.bound - dot) / norm1);
  }
  return best;
}

double onoff_bernoulli_rhs(std::span<const std::size_t> subset, const Grid<double>& on_probability) {
  require(!subset.empty(), "onoff_bernoulli_rhs: queue subset must be nonempty");
  std::vector<bool> seen(on_probability.rows(), false);
  for (std::size_t n : subset) {
    require(n < on_probability.rows(), "onoff_bernoulli_rhs: queue index out of range");
    require(!seen[n], "onoff_bernoulli_rhs: duplicate queue index");
    seen[n] = true;
  }
  double total = static_cast<double>(on_probability.cols());
  for (std::size_t k = 0; k < on_probability.cols(); ++k) {
    double all_off = 1.0;
    for (std::size_t n : subset) {
      const double p = on_probability(n, k);
      require(p >= 0.0 && p <= 1.0, "onoff_bernoulli_rhs: probabilities must lie in [0, 1]");
      all_off *= 1.0 - p;
    }
    total -= all_off;
  }
  return total;
}

}  // namespace mqms
