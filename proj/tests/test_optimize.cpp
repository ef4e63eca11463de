#include <doctest.h>

#include <cmath>
#include <random>

#include "mqms/optimize.hpp"
#include "mqms/policy.hpp"
#include "mqms/region.hpp"
#include "test_support.hpp"

using namespace mqms;

namespace {

// Solves the n x n system by Gaussian elimination with partial pivoting.
std::optional<RateVector> solve_square(std::vector<RateVector> a, RateVector b) {
  const std::size_t n = b.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t p = c;
    for (std::size_t r = c + 1; r < n; ++r) {
      if (std::abs(a[r][c]) > std::abs(a[p][c])) p = r;
    }
    if (std::abs(a[p][c]) < 1e-12) return std::nullopt;
    std::swap(a[p], a[c]);
    std::swap(b[p], b[c]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c) continue;
      const double f = a[r][c] / a[c][c];
      for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
      b[r] -= f * b[c];
    }
  }
  RateVector x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = b[i] / a[i][i];
  return x;
}

// Best objective over every basic feasible point: all n-subsets of the
// constraints (including the box) solved as equalities.
std::optional<double> brute_force_lp(const LPProblem& p) {
  const std::size_t n = p.variables();
  std::vector<RateVector> rows = p.rows;
  RateVector rhs = p.rhs;
  for (std::size_t j = 0; j < n; ++j) {
    RateVector e(n, 0.0);
    e[j] = -1.0;
    rows.push_back(e);
    rhs.push_back(0.0);
    if (p.upper) {
      e[j] = 1.0;
      rows.push_back(e);
      rhs.push_back((*p.upper)[j]);
    }
  }
  const std::size_t m = rows.size();
  std::optional<double> best;
  std::vector<std::size_t> pick(n);
  std::function<void(std::size_t, std::size_t)> choose = [&](std::size_t from, std::size_t depth) {
    if (depth == n) {
      std::vector<RateVector> a;
      RateVector b;
      for (std::size_t i : pick) {
        a.push_back(rows[i]);
        b.push_back(rhs[i]);
      }
      auto x = solve_square(a, b);
      if (!x) return;
      for (std::size_t i = 0; i < m; ++i) {
        double lhs = 0.0;
        for (std::size_t j = 0; j < n; ++j) lhs += rows[i][j] * (*x)[j];
        if (lhs > rhs[i] + 1e-9) return;
      }
      double obj = 0.0;
      for (std::size_t j = 0; j < n; ++j) obj += p.objective[j] * (*x)[j];
      if (!best || obj > *best) best = obj;
      return;
    }
    for (std::size_t i = from; i < m; ++i) {
      pick[depth] = i;
      choose(i + 1, depth + 1);
    }
  };
  choose(0, 0);
  return best;
}

LPProblem example_lp(RateVector objective) {
  LPProblem p = region_lp(test::example_region(), std::vector<double>{5, 5});
  p.objective = std::move(objective);
  return p;
}

}  // namespace

TEST_SUITE("optimize") {
  TEST_CASE("simplex on the published inequality system") {
    CHECK(simplex_solve(example_lp({1, 1})).objective == doctest::Approx(6.3577).epsilon(1e-12));
    CHECK(simplex_solve(example_lp({1, 0})).objective == doctest::Approx(4.4792).epsilon(1e-12));
    CHECK(simplex_solve(example_lp({0, 1})).objective == doctest::Approx(4.4912).epsilon(1e-12));
    const auto zero = simplex_solve(example_lp({0, 0}));
    CHECK(zero.objective == 0.0);
    for (const auto& h : test::example_region().halfspaces) {
      CHECK(h.alpha[0] * zero.x[0] + h.alpha[1] * zero.x[1] <= h.bound + 1e-9);
    }
  }

  TEST_CASE("simplex reports infeasible and unbounded problems") {
    LPProblem infeasible{{1, 1}, {{1, 1}, {-1, -1}}, {1, -2}, std::nullopt};
    CHECK_THROWS_AS(simplex_solve(infeasible), LpInfeasible);
    LPProblem unbounded{{1, 0}, {{-1, 1}}, {1}, std::nullopt};
    CHECK_THROWS_AS(simplex_solve(unbounded), LpUnbounded);
  }

  TEST_CASE("simplex handles negative right-hand sides") {
    // x + y >= 1 written as -x - y <= -1; minimise x + 2y
    LPProblem p{{-1, -2}, {{-1, -1}, {1, 0}}, {-1, 3}, std::nullopt};
    const auto s = simplex_solve(p);
    CHECK(s.objective == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(s.x[0] == doctest::Approx(1.0));
  }

  TEST_CASE("simplex survives a degenerate cycling-prone instance") {
    // Beale's example: cycles without an anti-cycling rule.
    LPProblem p{{0.75, -150, 0.02, -6},
                {{0.25, -60, -0.04, 9}, {0.5, -90, -0.02, 3}, {0, 0, 1, 0}},
                {0, 0, 1},
                std::nullopt};
    CHECK(simplex_solve(p).objective == doctest::Approx(0.05).epsilon(1e-12));
  }

  TEST_CASE("property: simplex matches brute-force vertex enumeration") {
    std::mt19937_64 gen(19);
    std::uniform_real_distribution<double> coef(-1.0, 3.0);
    std::uniform_real_distribution<double> rhs(-0.5, 5.0);
    std::uniform_int_distribution<std::size_t> nvar(1, 3), ncon(1, 8);
    int solved = 0;
    for (int trial = 0; trial < 600; ++trial) {
      LPProblem p;
      const std::size_t n = nvar(gen), m = ncon(gen);
      for (std::size_t j = 0; j < n; ++j) p.objective.push_back(coef(gen));
      for (std::size_t i = 0; i < m; ++i) {
        RateVector row;
        for (std::size_t j = 0; j < n; ++j) row.push_back(coef(gen));
        p.rows.push_back(row);
        p.rhs.push_back(rhs(gen));
      }
      p.upper = RateVector(n, 4.0);
      const auto oracle = brute_force_lp(p);
      if (!oracle) {
        CHECK_THROWS_AS(simplex_solve(p), LpInfeasible);
        continue;
      }
      const auto s = simplex_solve(p);
      CHECK(s.objective == doctest::Approx(*oracle).epsilon(1e-9).scale(1.0));
      ++solved;
    }
    CHECK(solved > 300);
  }

  TEST_CASE("Frank-Wolfe finds the published optimum") {
    const auto sol = solve_utility(parse_utilities("log:10,linear:10"), test::example_region(), std::vector<double>{5, 5});
    CHECK(std::abs(sol.r[0] - 1.1266) <= 1e-3);
    CHECK(std::abs(sol.r[1] - 4.4912) <= 1e-3);
    CHECK(sol.gap <= 1e-8);
  }

  TEST_CASE("Frank-Wolfe with a linear objective reproduces the simplex vertex") {
    const auto lp = example_lp({2, 3});
    ConcaveObjective f{[](std::span<const double> r) { return 2 * r[0] + 3 * r[1]; },
                       [](std::span<const double>) { return RateVector{2, 3}; }};
    const auto fw = frank_wolfe(f, lp);
    const auto s = simplex_solve(lp);
    CHECK(fw.iters == 1);
    CHECK(fw.x == s.x);
    CHECK(fw.converged);
  }

  TEST_CASE("Frank-Wolfe on a symmetric system lands on the symmetric point") {
    const auto poly = stability_polytope(test::onoff_two_queue(0.5, 0.5));
    const auto sol = solve_utility(parse_utilities("log:1,log:1"), poly, std::vector<double>{1, 1});
    CHECK(sol.r[0] == doctest::Approx(0.375).epsilon(1e-6));
    CHECK(sol.r[1] == doctest::Approx(0.375).epsilon(1e-6));
  }

  TEST_CASE("interior caps are optimal for increasing utilities") {
    const auto poly = stability_polytope(test::onoff_two_queue(0.5, 0.5));
    const std::vector<double> caps{0.2, 0.3};
    const auto lin = solve_utility(parse_utilities("linear:1,linear:2"), poly, caps);
    CHECK(lin.r[0] == doctest::Approx(0.2));
    CHECK(lin.r[1] == doctest::Approx(0.3));
    const auto mixed = solve_utility(parse_utilities("log:3,linear:2"), poly, caps);
    CHECK(mixed.r[0] == doctest::Approx(0.2).epsilon(1e-6));
    CHECK(mixed.r[1] == doctest::Approx(0.3).epsilon(1e-6));
  }

  TEST_CASE("property: utility optimum is feasible and beats sampled vertices") {
    std::mt19937_64 gen(23);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int sys = 0; sys < 5; ++sys) {
      const SystemDims dims{std::size_t(2 + sys % 2), 2, 2};
      const auto d = test::random_product(dims, gen);
      const auto poly = stability_polytope(d);
      UtilitySpec utilities;
      for (std::size_t n = 0; n < dims.queues; ++n) {
        utilities.push_back(n % 2 ? Utility{LinearUtility{1 + 4 * u(gen)}} : Utility{LogUtility{1 + 9 * u(gen)}});
      }
      const std::vector<double> caps(dims.queues, 1.5);
      const auto sol = solve_utility(utilities, poly, caps);
      for (const auto& h : poly.halfspaces) {
        double lhs = 0.0;
        for (std::size_t n = 0; n < dims.queues; ++n) lhs += h.alpha[n] * sol.r[n];
        CHECK(lhs <= h.bound + 1e-8);
      }
      for (std::size_t n = 0; n < dims.queues; ++n) {
        CHECK(sol.r[n] >= -1e-8);
        CHECK(sol.r[n] <= caps[n] + 1e-8);
      }
      CHECK(sol.gap <= 1e-8);
      for (int i = 0; i < 100; ++i) {
        std::vector<double> alpha(dims.queues);
        for (auto& a : alpha) a = u(gen);
        auto v = vertex_for_direction(alpha, d);
        for (std::size_t n = 0; n < dims.queues; ++n) v[n] = std::min(v[n], caps[n]);
        CHECK(sol.utility >= total_utility(utilities, v) - 1e-6);
      }
    }
  }
}
