#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>
#include <set>

#include "mqms/region.hpp"
#include "test_support.hpp"

using namespace mqms;

namespace {

// Membership checked literally: every bipartition with nonzero mass on both
// sides must have some cross pair whose ratio is m/n with 1 <= m, n <= M.
bool in_v_by_partitions(const std::vector<Count>& alpha, Count M) {
  const std::size_t n = alpha.size();
  for (std::uint32_t mask = 1; mask + 1 < (1u << n); ++mask) {
    bool left_nonzero = false, right_nonzero = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (alpha[i] == 0) continue;
      ((mask >> i) & 1u ? left_nonzero : right_nonzero) = true;
    }
    if (!left_nonzero || !right_nonzero) continue;
    bool linked = false;
    for (std::size_t i = 0; i < n && !linked; ++i) {
      if (!((mask >> i) & 1u) || alpha[i] == 0) continue;
      for (std::size_t j = 0; j < n && !linked; ++j) {
        if (((mask >> j) & 1u) || alpha[j] == 0) continue;
        for (Count m = 1; m <= M && !linked; ++m) {
          for (Count k = 1; k <= M && !linked; ++k) linked = alpha[i] * m == alpha[j] * k;
        }
      }
    }
    if (!linked) return false;
  }
  return true;
}

std::size_t brute_force_candidate_count(std::size_t N, Count M) {
  std::set<Count> w{1};
  for (std::size_t j = 0; j + 1 < N; ++j) {
    std::set<Count> next;
    for (Count p : w) {
      for (Count m = 0; m <= M; ++m) next.insert(p * m);
    }
    w = next;
  }
  const std::vector<Count> values(w.begin(), w.end());
  std::set<std::vector<Count>> seen;
  std::size_t total = 1;
  for (std::size_t i = 0; i < N; ++i) total *= values.size();
  for (std::size_t code = 1; code < total; ++code) {
    std::vector<Count> v(N);
    std::size_t c = code;
    for (std::size_t i = 0; i < N; ++i, c /= values.size()) v[i] = values[c % values.size()];
    Count g = 0;
    for (Count x : v) g = std::gcd(g, x);
    for (Count& x : v) x /= g;
    if (in_v_by_partitions(v, M)) seen.insert(v);
  }
  return seen.size();
}

std::vector<std::vector<Count>> as_lists(const std::vector<WeightVector>& ws) {
  std::vector<std::vector<Count>> out;
  for (const auto& w : ws) out.emplace_back(w.entries().begin(), w.entries().end());
  return out;
}

}  // namespace

TEST_SUITE("region") {
  TEST_CASE("weight values are distinct products of N-1 factors") {
    CHECK(weight_values(2, 3) == std::vector<Count>{0, 1, 2, 3});
    CHECK(weight_values(3, 2) == std::vector<Count>{0, 1, 2, 4});
    CHECK(weight_values(3, 3) == std::vector<Count>{0, 1, 2, 3, 4, 6, 9});
    CHECK(weight_values(3, 4).size() == 10);
    CHECK(multiset_weight_count(3, 4) == 11);
    CHECK(multiset_weight_count(3, 3) == 7);
    CHECK_THROWS_AS(weight_values(1, 3), ContractViolation);
  }

  TEST_CASE("in_v on the worked examples") {
    CHECK_FALSE(in_v(std::vector<Count>{1, 2, 5, 10}, 2));
    CHECK(in_v(std::vector<double>{0.0, 2.5, 0.0, 0.0}, 1));
    CHECK(in_v(std::vector<double>{0.0, 2.5, 0.0, 0.0}, 7));
    CHECK(in_v(std::vector<Count>{1, 1, 1, 1, 1}, 1));
    CHECK(in_v(std::vector<double>{1.0, 2.0, 5.0, 10.0}, 5));
    CHECK_FALSE(in_v(std::vector<double>{1.0, 2.0, 5.0, 10.0}, 2));
    CHECK_THROWS_AS(in_v(std::vector<Count>{0, 0}, 2), ContractViolation);
  }

  TEST_CASE("property: ratio-graph connectivity matches the partition definition") {
    std::mt19937_64 gen(21);
    std::uniform_int_distribution<Count> entry(0, 12);
    std::uniform_int_distribution<std::size_t> dim(1, 6);
    std::uniform_int_distribution<Count> mdist(1, 4);
    for (int trial = 0; trial < 3000; ++trial) {
      std::vector<Count> a(dim(gen));
      for (auto& v : a) v = entry(gen);
      if (std::all_of(a.begin(), a.end(), [](Count c) { return c == 0; })) a[0] = 1;
      const Count M = mdist(gen);
      CHECK(in_v(a, M) == in_v_by_partitions(a, M));
      const std::vector<double> af(a.begin(), a.end());
      CHECK(in_v(af, M) == in_v_by_partitions(a, M));
    }
  }

  TEST_CASE("candidate weights for two queues and M = 3") {
    const std::vector<std::vector<Count>> expected{{0, 1}, {1, 0}, {1, 1}, {1, 2}, {1, 3},
                                                   {2, 1}, {2, 3}, {3, 1}, {3, 2}};
    CHECK(as_lists(candidate_weights(2, 3)) == expected);
  }

  TEST_CASE("candidate weights for ON-OFF links") {
    const std::vector<std::vector<Count>> expected{{0, 1}, {1, 0}, {1, 1}};
    CHECK(as_lists(candidate_weights(2, 1)) == expected);
    CHECK(candidate_weights(3, 1).size() == 7);
    CHECK(candidate_weights(3, 2).size() == 25);
  }

  TEST_CASE("candidate counts agree with the brute-force oracle") {
    for (std::size_t N : {2u, 3u}) {
      for (Count M = 1; M <= 4; ++M) {
        CAPTURE(N);
        CAPTURE(M);
        CHECK(candidate_weights(N, M).size() == brute_force_candidate_count(N, M));
      }
    }
    CHECK(candidate_weights(4, 2).size() == brute_force_candidate_count(4, 2));
  }

  TEST_CASE("candidate counts table") {
    struct Row {
      std::size_t N;
      Count M;
      std::size_t grid;
      std::size_t candidates;
    };
    // Swapping the two coordinates maps candidates to candidates and fixes only
    // (1, 1), so every N = 2 count is odd: M = 4 gives 13.
    for (const Row r : {Row{2, 1, 3, 3}, Row{2, 2, 8, 5}, Row{2, 3, 15, 9}, Row{2, 4, 24, 13}, Row{3, 1, 7, 7},
                        Row{3, 2, 63, 25}, Row{3, 3, 342, 109}, Row{3, 4, 999, 253}}) {
      CAPTURE(r.N);
      CAPTURE(r.M);
      const auto c = candidate_counts(r.N, r.M);
      CHECK(c.full_grid_minus_zero == r.grid);
      CHECK(c.candidates == r.candidates);
    }
    const auto c34 = candidate_counts(3, 4);
    CHECK(c34.weight_set_size == 10);
    CHECK(c34.multiset_weight_size == 11);
    CHECK(c34.multiset_grid_minus_zero == 1330.0);
  }

  TEST_CASE("candidate enumeration honours its guard") {
    CHECK_THROWS_AS(candidate_weights(3, 4, {100.0}), StateSpaceTooLarge);
  }

  TEST_CASE("facet rhs for two ON-OFF queues") {
    for (auto [p1, p2] : {std::pair{0.5, 0.5}, std::pair{0.7, 0.9}, std::pair{0.2, 0.35}}) {
      const auto d = test::onoff_two_queue(p1, p2);
      CHECK(facet_rhs(std::vector<double>{1, 1}, d) == doctest::Approx(p1 + p2 - p1 * p2).epsilon(1e-14));
      CHECK(facet_rhs(std::vector<double>{1, 0}, d) == doctest::Approx(p1).epsilon(1e-14));
      CHECK(facet_rhs(std::vector<double>{0, 0}, d) == 0.0);
    }
  }

  TEST_CASE("property: facet rhs equals the max over all allocation matrices") {
    std::mt19937_64 gen(4);
    std::uniform_real_distribution<double> u(0.0, 3.0);
    for (int trial = 0; trial < 40; ++trial) {
      const SystemDims dims{std::size_t(2 + trial % 2), std::size_t(1 + trial % 3), static_cast<Count>(1 + trial % 3)};
      const auto d = trial % 2 ? test::random_product(dims, gen) : test::random_explicit(dims, 12, gen);
      std::vector<double> alpha(dims.queues);
      for (auto& a : alpha) a = u(gen);
      CHECK(facet_rhs(alpha, d) == doctest::Approx(test::brute_force_rhs(alpha, d)).epsilon(1e-12));
    }
  }

  TEST_CASE("property: normalization and rhs are scale invariant") {
    std::mt19937_64 gen(9);
    std::uniform_int_distribution<Count> e(0, 9);
    const auto d = test::random_product({3, 2, 3}, gen);
    for (int trial = 0; trial < 200; ++trial) {
      std::vector<Count> a{e(gen), e(gen), e(gen) + 1};
      for (Count q : {2u, 3u, 7u}) {
        std::vector<Count> qa = a;
        for (auto& v : qa) v *= q;
        CHECK(WeightVector::normalized(qa) == WeightVector::normalized(a));
        const std::vector<double> af(a.begin(), a.end());
        const std::vector<double> qaf(qa.begin(), qa.end());
        CHECK(facet_rhs(qaf, d) == doctest::Approx(static_cast<double>(q) * facet_rhs(af, d)).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("property: ON-OFF closed form equals enumeration on every 0/1 normal") {
    std::mt19937_64 gen(17);
    for (int trial = 0; trial < 50; ++trial) {
      const std::size_t N = 1 + trial % 3;
      const std::size_t K = 1 + (trial / 3) % 3;
      const auto p = test::random_probabilities(N, K, gen);
      const auto d = ChannelDistribution::bernoulli(p);
      for (std::uint32_t mask = 1; mask < (1u << N); ++mask) {
        std::vector<std::size_t> subset;
        std::vector<double> indicator(N, 0.0);
        for (std::size_t n = 0; n < N; ++n) {
          if ((mask >> n) & 1u) {
            subset.push_back(n);
            indicator[n] = 1.0;
          }
        }
        CHECK(std::abs(facet_rhs(indicator, d) - onoff_bernoulli_rhs(subset, p)) <= 1e-9);
      }
    }
  }

  TEST_CASE("onoff_bernoulli_rhs examples") {
    Grid<double> p(2, 1, 0.5);
    CHECK(onoff_bernoulli_rhs(std::vector<std::size_t>{0, 1}, p) == 0.75);
    Grid<double> p2(2, 2, 0.5);
    CHECK(onoff_bernoulli_rhs(std::vector<std::size_t>{0, 1}, p2) == 1.5);
    Grid<double> p3(2, 3);
    p3(1, 0) = 0.1;
    p3(1, 1) = 0.4;
    p3(1, 2) = 0.25;
    CHECK(onoff_bernoulli_rhs(std::vector<std::size_t>{1}, p3) == doctest::Approx(0.75).epsilon(1e-15));
    CHECK_THROWS_AS(onoff_bernoulli_rhs(std::vector<std::size_t>{}, p), ContractViolation);
  }

  TEST_CASE("stability polytope of the symmetric ON-OFF system") {
    const auto poly = stability_polytope(test::onoff_two_queue(0.5, 0.5));
    REQUIRE(poly.halfspaces.size() == 3);
    CHECK(poly.halfspaces[0] == HalfSpace{{0, 1}, 0.5});
    CHECK(poly.halfspaces[1] == HalfSpace{{1, 0}, 0.5});
    CHECK(poly.halfspaces[2].alpha == RateVector{1, 1});
    CHECK(poly.halfspaces[2].bound == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(poly.source == NormalSource::VHat);
  }

  TEST_CASE("stability polytope shape for N = 2, K = 3, M = 3") {
    std::mt19937_64 gen(2);
    const auto d = test::random_product({2, 3, 3}, gen);
    const auto vhat = stability_polytope(d);
    CHECK(vhat.halfspaces.size() == 9);
    const auto full = stability_polytope(d, {NormalMode::FullWN});
    CHECK(full.halfspaces.size() == 15);
    CHECK(full.source == NormalSource::FullWN);
    // (2, 2) duplicates (1, 1) up to scale
    const auto find = [&](RateVector a) {
      return std::find_if(full.halfspaces.begin(), full.halfspaces.end(), [&](const HalfSpace& h) { return h.alpha == a; });
    };
    CHECK(find({2, 2})->bound == doctest::Approx(2.0 * find({1, 1})->bound).epsilon(1e-13));
  }

  TEST_CASE("stability polytope of a single queue") {
    const auto d = ChannelDistribution::explicit_states(
        {1, 2, 2}, {{0.5, ChannelState::from_rows({{2, 1}})}, {0.5, ChannelState::from_rows({{0, 2}})}});
    const auto poly = stability_polytope(d);
    REQUIRE(poly.halfspaces.size() == 1);
    CHECK(poly.halfspaces[0].bound == doctest::Approx(2.5));
  }

  TEST_CASE("margin examples") {
    const auto poly = stability_polytope(test::onoff_two_queue(0.5, 0.5));
    CHECK(margin(std::vector<double>{0.25, 0.25}, poly) == doctest::Approx(0.125).epsilon(1e-14));
    CHECK(margin(std::vector<double>{0.5, 0.1}, poly) == doctest::Approx(0.0).epsilon(1e-14));
    const auto poly2 = stability_polytope(test::onoff_two_queue(0.7, 0.9));
    CHECK(margin(std::vector<double>{0.5, 0.6}, poly2) == doctest::Approx(-0.065).epsilon(1e-12));
    CHECK(margin(std::vector<double>{0.3, 0.6}, poly2) == doctest::Approx(0.035).epsilon(1e-12));
    CHECK_THROWS_AS(margin(std::vector<double>{0.1, 0.1}, RegionPolytope{}), ContractViolation);
  }
}
