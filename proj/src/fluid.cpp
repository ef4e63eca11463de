#include "mqms/fluid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "mqms/error.hpp"
#include "mqms/rng.hpp"

namespace mqms {

using detail::require;

ExpFluidSystem::ExpFluidSystem(double m1, double m2) : mu1(m1), mu2(m2) {
  require(std::isfinite(m1) && std::isfinite(m2) && m1 > 0.0 && m2 > 0.0, "exponential means must be positive");
}

double fluid_rhs_closed(double alpha1, double alpha2, const ExpFluidSystem& sys) {
  require(alpha1 >= 0.0 && alpha2 >= 0.0, "fluid_rhs_closed: alpha must be nonnegative");
  require(alpha1 > 0.0 || alpha2 > 0.0, "fluid_rhs_closed: alpha must not be zero");
  const double mu1 = sys.mu1;
  const double mu2 = sys.mu2;
  const double s = alpha1 * mu1 + alpha2 * mu2;
  const double s2 = s * s;
  return alpha1 * (mu1 - alpha2 * alpha2 * mu2 * mu2 * mu1 / s2) +
         alpha2 * (alpha1 * alpha2 * mu2 * mu2 * mu1 / s2 + alpha2 * mu2 * mu2 / s);
}

McEstimate fluid_rhs_mc(double alpha1, double alpha2, const ExpFluidSystem& sys, std::uint64_t samples,
                        std::uint64_t seed) {
  require(samples >= 1, "fluid_rhs_mc: need at least one sample");
  require(alpha1 >= 0.0 && alpha2 >= 0.0, "fluid_rhs_mc: alpha must be nonnegative");
  Rng rng(seed);
  // Welford accumulation keeps the summation order fixed.
  double mean = 0.0;
  double m2 = 0.0;
  for (std::uint64_t i = 1; i <= samples; ++i) {
    const double c1 = -sys.mu1 * std::log(rng.uniform_open_left());
    const double c2 = -sys.mu2 * std::log(rng.uniform_open_left());
    const double x = std::max(alpha1 * c1, alpha2 * c2);
    const double delta = x - mean;
    mean += delta / static_cast<double>(i);
    m2 += delta * (x - mean);
  }
  McEstimate e;
  e.mean = mean;
  e.stderr_ = samples > 1 ? std::sqrt(m2 / static_cast<double>(samples - 1) / static_cast<double>(samples)) : 0.0;
  return e;
}

double fluid_boundary(double lambda1, const ExpFluidSystem& sys) {
  if (!(lambda1 >= 0.0 && lambda1 <= sys.mu1)) throw DomainError("fluid_boundary: lambda1 must lie in [0, mu1]");
  const double root = std::sqrt(1.0 - lambda1 / sys.mu1);
  return sys.mu2 * root * (2.0 - root);
}

double fluid_envelope(double lambda1, const ExpFluidSystem& sys, std::size_t directions) {
  require(directions >= 1, "fluid_envelope: need at least one direction");
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i <= directions; ++i) {
    const double theta = std::numbers::pi / 2.0 * static_cast<double>(i) / static_cast<double>(directions + 1);
    const double a1 = std::cos(theta);
    const double a2 = std::sin(theta);
    best = std::min(best, (fluid_rhs_closed(a1, a2, sys) - a1 * lambda1) / a2);
  }
  return best;
}

std::vector<BoundaryPoint> fluid_boundary_curve(const ExpFluidSystem& sys, std::size_t points) {
  require(points >= 2, "fluid_boundary_curve: need at least two points");
  std::vector<BoundaryPoint> out;
  out.reserve(points);
  for (std::size_t i = 0; i < points; ++i) {
    const double l1 = i + 1 == points ? sys.mu1 : sys.mu1 * static_cast<double>(i) / static_cast<double>(points - 1);
    out.push_back({l1, fluid_boundary(l1, sys)});
  }
  return out;
}

}  // namespace mqms
