#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "mqms/core.hpp"
#include "mqms/flowctl.hpp"

namespace mqms {

class LpInfeasible : public std::runtime_error {
 public:
  LpInfeasible() : std::runtime_error("linear program is infeasible") {}
};

class LpUnbounded : public std::runtime_error {
 public:
  LpUnbounded() : std::runtime_error("linear program is unbounded") {}
};

/// maximize <c, x> subject to <a_i, x> <= b_i, 0 <= x <= upper.
struct LPProblem {
  RateVector objective;
  std::vector<RateVector> rows;
  RateVector rhs;
  std::optional<RateVector> upper;  ///< per-variable upper bounds

  [[nodiscard]] std::size_t variables() const noexcept { return objective.size(); }
};

struct LPSolution {
  RateVector x;
  double objective = 0.0;
};

/// Two-phase dense tableau simplex with Bland's rule.
LPSolution simplex_solve(const LPProblem& problem);

/// Constraint rows r in region and 0 <= r <= caps.
LPProblem region_lp(const RegionPolytope& polytope, std::span<const double> caps);

struct ConcaveObjective {
  std::function<double(std::span<const double>)> value;
  std::function<RateVector(std::span<const double>)> gradient;
};

struct FrankWolfeOptions {
  std::size_t max_iters = 10000;
  double tol = 1e-8;
};

struct FrankWolfeResult {
  RateVector x;
  double value = 0.0;
  double gap = 0.0;  ///< <grad f(x), v - x> at the last oracle call
  std::size_t iters = 0;
  bool converged = false;
};

/// Conditional gradient with the simplex as linear oracle, away steps and
/// exact line search. `start` must be feasible; empty means the origin.
FrankWolfeResult frank_wolfe(const ConcaveObjective& f, const LPProblem& feasible, RateVector start = {},
                             FrankWolfeOptions options = {});

struct UtilitySolution {
  RateVector r;
  double utility = 0.0;
  double gap = 0.0;
  std::size_t iters = 0;
};

/// maximize sum_n f_n(r_n) over the region intersected with the box [0, caps].
UtilitySolution solve_utility(const UtilitySpec& utilities, const RegionPolytope& polytope,
                              std::span<const double> caps, FrankWolfeOptions options = {});

}  // namespace mqms
