#pragma once

#include <cstdint>
#include <vector>

namespace mqms {

/// Two queues, one server, independent exponential link capacities with
/// means mu1 and mu2.
struct ExpFluidSystem {
  double mu1 = 1.0;
  double mu2 = 1.0;

  ExpFluidSystem(double m1, double m2);
};

/// E[max(a1 C1, a2 C2)] in closed form.
double fluid_rhs_closed(double alpha1, double alpha2, const ExpFluidSystem& sys);

struct McEstimate {
  double mean = 0.0;
  double stderr_ = 0.0;
};

/// Monte Carlo estimate of E[max(a1 C1, a2 C2)] with inverse-CDF sampling.
McEstimate fluid_rhs_mc(double alpha1, double alpha2, const ExpFluidSystem& sys, std::uint64_t samples,
                        std::uint64_t seed);

/// Largest stable lambda2 for a given lambda1 in [0, mu1].
double fluid_boundary(double lambda1, const ExpFluidSystem& sys);

/// Same boundary recovered from supporting lines: min over directions
/// (cos t, sin t), t in (0, pi/2), of (rhs(t) - lambda1 cos t) / sin t.
double fluid_envelope(double lambda1, const ExpFluidSystem& sys, std::size_t directions);

struct BoundaryPoint {
  double lambda1;
  double lambda2;
};

/// `points` evenly spaced samples of the boundary, endpoints included.
std::vector<BoundaryPoint> fluid_boundary_curve(const ExpFluidSystem& sys, std::size_t points);

}  // namespace mqms
