#include "mqms/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mqms {

using detail::require;

namespace {

constexpr double kPivotEps = 1e-11;
constexpr double kCostEps = 1e-11;
constexpr double kFeasibilityEps = 1e-9;

class Tableau {
 public:
  Tableau(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_((rows + 1) * (cols + 1), 0.0), basis_(rows) {}

  double& at(std::size_t i, std::size_t j) { return data_[i * (cols_ + 1) + j]; }
  double& rhs(std::size_t i) { return at(i, cols_); }
  double& cost(std::size_t j) { return at(rows_, j); }
  double& value() { return at(rows_, cols_); }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::vector<std::size_t>& basis() { return basis_; }

  /// Objective row becomes z_j - c_j for the given costs, priced against the basis.
  void set_objective(std::span<const double> costs) {
    for (std::size_t j = 0; j <= cols_; ++j) at(rows_, j) = j < cols_ ? -costs[j] : 0.0;
    for (std::size_t i = 0; i < rows_; ++i) {
      const double cb = costs[basis_[i]];
      if (cb == 0.0) continue;
      for (std::size_t j = 0; j <= cols_; ++j) at(rows_, j) += cb * at(i, j);
    }
  }

  void pivot(std::size_t r, std::size_t c) {
    const double p = at(r, c);
    for (std::size_t j = 0; j <= cols_; ++j) at(r, j) /= p;
    at(r, c) = 1.0;
    for (std::size_t i = 0; i <= rows_; ++i) {
      if (i == r) continue;
      const double f = at(i, c);
      if (f == 0.0) continue;
      for (std::size_t j = 0; j <= cols_; ++j) at(i, j) -= f * at(r, j);
      at(i, c) = 0.0;
    }
    for (std::size_t i = 0; i < rows_; ++i) {
      if (rhs(i) < 0.0 && rhs(i) > -kFeasibilityEps) rhs(i) = 0.0;
    }
    basis_[r] = c;
  }

  /// Maximises with Bland's rule over the allowed columns. False when unbounded.
  bool optimize(const std::vector<bool>& allowed) {
    while (true) {
      std::size_t enter = cols_;
      for (std::size_t j = 0; j < cols_; ++j) {
        if (allowed[j] && cost(j) < -kCostEps) {
          enter = j;
          break;
        }
      }
      if (enter == cols_) return true;

      std::size_t leave = rows_;
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < rows_; ++i) {
        const double a = at(i, enter);
        if (a <= kPivotEps) continue;
        const double ratio = rhs(i) / a;
        if (ratio < best - 1e-12 || (std::abs(ratio - best) <= 1e-12 && basis_[i] < basis_[leave])) {
          best = ratio;
          leave = i;
        }
      }
      if (leave == rows_) return false;
      pivot(leave, enter);
    }
  }

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> data_;
  std::vector<std::size_t> basis_;
};

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

LPSolution simplex_solve(const LPProblem& problem) {
  const std::size_t n = problem.variables();
  require(n >= 1, "simplex_solve: problem has no variables");
  require(problem.rows.size() == problem.rhs.size(), "simplex_solve: rows and rhs differ in length");
  for (double c : problem.objective) require(std::isfinite(c), "simplex_solve: objective must be finite");

  std::vector<RateVector> rows = problem.rows;
  RateVector rhs = problem.rhs;
  if (problem.upper) {
    require(problem.upper->size() == n, "simplex_solve: upper bounds must match variable count");
    for (std::size_t j = 0; j < n; ++j) {
      RateVector e(n, 0.0);
      e[j] = 1.0;
      rows.push_back(std::move(e));
      rhs.push_back((*problem.upper)[j]);
    }
  }
  const std::size_t m = rows.size();
  std::size_t artificials = 0;
  for (std::size_t i = 0; i < m; ++i) {
    require(rows[i].size() == n, "simplex_solve: constraint row length must match variable count");
    require(std::isfinite(rhs[i]), "simplex_solve: rhs must be finite");
    for (double a : rows[i]) require(std::isfinite(a), "simplex_solve: constraint entries must be finite");
    if (rhs[i] < 0.0) ++artificials;
  }

  // Columns: x (n) | slack (m) | artificial (one per negative rhs row).
  const std::size_t cols = n + m + artificials;
  Tableau tab(m, cols);
  std::vector<bool> is_artificial(cols, false);
  std::size_t next_art = n + m;
  for (std::size_t i = 0; i < m; ++i) {
    const double sign = rhs[i] < 0.0 ? -1.0 : 1.0;
    for (std::size_t j = 0; j < n; ++j) tab.at(i, j) = sign * rows[i][j];
    tab.at(i, n + i) = sign;
    tab.rhs(i) = sign * rhs[i];
    if (sign < 0.0) {
      tab.at(i, next_art) = 1.0;
      is_artificial[next_art] = true;
      tab.basis()[i] = next_art++;
    } else {
      tab.basis()[i] = n + i;
    }
  }

  std::vector<bool> allowed(cols, true);
  if (artificials > 0) {
    std::vector<double> phase1(cols, 0.0);
    for (std::size_t j = n + m; j < cols; ++j) phase1[j] = -1.0;
    tab.set_objective(phase1);
    tab.optimize(allowed);
    if (tab.value() < -kFeasibilityEps * std::max<double>(1.0, static_cast<double>(m))) throw LpInfeasible();

    for (std::size_t i = 0; i < m; ++i) {
      if (!is_artificial[tab.basis()[i]]) continue;
      for (std::size_t j = 0; j < n + m; ++j) {
        if (std::abs(tab.at(i, j)) > 1e-9) {
          tab.pivot(i, j);
          break;
        }
      }
    }
    for (std::size_t j = n + m; j < cols; ++j) allowed[j] = false;
  }

  std::vector<double> phase2(cols, 0.0);
  std::copy(problem.objective.begin(), problem.objective.end(), phase2.begin());
  tab.set_objective(phase2);
  if (!tab.optimize(allowed)) throw LpUnbounded();

  LPSolution sol;
  sol.x.assign(n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    if (tab.basis()[i] < n) sol.x[tab.basis()[i]] = std::max(0.0, tab.rhs(i));
  }
  sol.objective = dot(problem.objective, sol.x);
  return sol;
}

LPProblem region_lp(const RegionPolytope& polytope, std::span<const double> caps) {
  const std::size_t n = polytope.dims.queues;
  require(caps.size() == n, "region_lp: caps length must equal N");
  LPProblem p;
  p.objective.assign(n, 0.0);
  for (const auto& h : polytope.halfspaces) {
    require(h.alpha.size() == n, "region_lp: half-space dimension mismatch");
    p.rows.push_back(h.alpha);
    p.rhs.push_back(h.bound);
  }
  for (double c : caps) require(std::isfinite(c) && c >= 0.0, "region_lp: caps must be finite and nonnegative");
  p.upper = RateVector(caps.begin(), caps.end());
  return p;
}

FrankWolfeResult frank_wolfe(const ConcaveObjective& f, const LPProblem& feasible, RateVector start,
                             FrankWolfeOptions options) {
  const std::size_t n = feasible.variables();
  RateVector x = start.empty() ? RateVector(n, 0.0) : std::move(start);
  require(x.size() == n, "frank_wolfe: start point has wrong dimension");

  auto checked_gradient = [&](std::span<const double> at) {
    RateVector g = f.gradient(at);
    require(g.size() == n, "frank_wolfe: gradient has wrong dimension");
    for (double v : g) require(std::isfinite(v), "frank_wolfe: gradient is not finite");
    return g;
  };
  auto along = [&](const RateVector& from, const RateVector& d, double s) {
    RateVector p(n);
    for (std::size_t i = 0; i < n; ++i) p[i] = from[i] + s * d[i];
    return p;
  };
  // Maximises the concave phi(s) = f(x + s d) on [0, smax]; phi'(0) > 0.
  auto line_search = [&](const RateVector& d, double smax) {
    if (dot(checked_gradient(along(x, d, smax)), d) >= 0.0) return smax;
    constexpr double kInvPhi = 0.6180339887498949;
    double lo = 0.0;
    double hi = smax;
    double s1 = hi - kInvPhi * (hi - lo);
    double s2 = lo + kInvPhi * (hi - lo);
    double f1 = f.value(along(x, d, s1));
    double f2 = f.value(along(x, d, s2));
    while (hi - lo > 1e-10) {
      if (f1 < f2) {
        lo = s1;
        s1 = s2;
        f1 = f2;
        s2 = lo + kInvPhi * (hi - lo);
        f2 = f.value(along(x, d, s2));
      } else {
        hi = s2;
        s2 = s1;
        f2 = f1;
        s1 = hi - kInvPhi * (hi - lo);
        f1 = f.value(along(x, d, s1));
      }
    }
    return 0.5 * (lo + hi);
  };

  // x is kept as a convex combination of visited vertices so that away
  // steps can shift weight off the worst one. Plain line-search steps
  // zigzag at O(1/t) when the optimum sits inside a face.
  std::vector<RateVector> atoms{x};
  std::vector<double> weights{1.0};

  FrankWolfeResult res;
  LPProblem oracle = feasible;
  for (res.iters = 0; res.iters < options.max_iters; ++res.iters) {
    const RateVector g = checked_gradient(x);
    oracle.objective = g;
    const RateVector v = simplex_solve(oracle).x;

    RateVector d(n);
    for (std::size_t i = 0; i < n; ++i) d[i] = v[i] - x[i];
    res.gap = dot(g, d);
    if (res.gap <= options.tol) {
      res.converged = true;
      break;
    }

    std::size_t away = 0;
    for (std::size_t a = 1; a < atoms.size(); ++a) {
      if (dot(g, atoms[a]) < dot(g, atoms[away])) away = a;
    }
    RateVector da(n);
    for (std::size_t i = 0; i < n; ++i) da[i] = x[i] - atoms[away][i];
    const double away_gap = dot(g, da);

    if (res.gap >= away_gap || weights[away] >= 1.0) {
      const double s = line_search(d, 1.0);
      if (s == 1.0) {
        atoms = {v};
        weights = {1.0};
        x = v;
        continue;
      }
      for (double& w : weights) w *= 1.0 - s;
      const auto hit = std::find(atoms.begin(), atoms.end(), v);
      if (hit == atoms.end()) {
        atoms.push_back(v);
        weights.push_back(s);
      } else {
        weights[static_cast<std::size_t>(hit - atoms.begin())] += s;
      }
      x = along(x, d, s);
    } else {
      const double smax = weights[away] / (1.0 - weights[away]);
      const double s = line_search(da, smax);
      for (double& w : weights) w *= 1.0 + s;
      weights[away] -= s;
      x = along(x, da, s);
      if (s == smax) {
        atoms.erase(atoms.begin() + static_cast<std::ptrdiff_t>(away));
        weights.erase(weights.begin() + static_cast<std::ptrdiff_t>(away));
      }
    }
  }
  res.value = f.value(x);
  res.x = std::move(x);
  return res;
}

UtilitySolution solve_utility(const UtilitySpec& utilities, const RegionPolytope& polytope,
                              std::span<const double> caps, FrankWolfeOptions options) {
  require(utilities.size() == polytope.dims.queues, "solve_utility: one utility per queue required");
  LPProblem lp = region_lp(polytope, caps);

  UtilitySolution out;
  if (std::all_of(utilities.begin(), utilities.end(), is_linear)) {
    for (std::size_t n = 0; n < utilities.size(); ++n) lp.objective[n] = utility_derivative(utilities[n], 0.0);
    out.r = simplex_solve(lp).x;
    out.utility = total_utility(utilities, out.r);
    out.iters = 1;
    return out;
  }

  ConcaveObjective f{
      [&](std::span<const double> r) { return total_utility(utilities, r); },
      [&](std::span<const double> r) {
        RateVector g(r.size());
        for (std::size_t n = 0; n < r.size(); ++n) g[n] = utility_derivative(utilities[n], r[n]);
        return g;
      },
  };
  const auto fw = frank_wolfe(f, lp, {}, options);
  out.r = fw.x;
  out.utility = fw.value;
  out.gap = fw.gap;
  out.iters = fw.iters;
  return out;
}

}  // namespace mqms
