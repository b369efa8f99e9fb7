#pragma once

#include <vector>

#include "mdm/dpf.hpp"
#include "mdm/quadrature.hpp"

namespace mdm {

// Extended-real energy result. `trusted` means the endpoint exponents were
// known analytically and panel doubling moved the value by < 1e-8 relative.
struct EnergyValue {
    double value = 0.0;
    bool diverged = false;
    bool trusted = true;
    double richardson_delta = 0.0;

    bool finite() const { return !diverged; }
};

struct EquivalenceConstants {
    double Ck = 1.0, Cc = 1.0, Cg = 1.0;
    double C1 = 1.0, C2 = 1.0;
};

// C_k by brute-force state enumeration (checked against n(d+1)^{n-1}),
// C_c = n 2^{n-1}, C_g = n, C1 = C_k/C_c, C2 = C_c/C_g.
EquivalenceConstants equivalence_constants(int n, int d);

// Scalar closed form: integral of alpha_dot^2 / (gamma_dot alpha (1-alpha)).
// Minimum pi^2, attained exactly when alpha = optimal_alpha(gamma).
EnergyValue scalar_energy(const MaskSchedule& alpha, const InterpolationSchedule& gamma,
                          const QuadratureSpec& q);

// The three enumeration-based energies; each returns the directly enumerated
// value, internally cross-checkable against C * scalar_energy.
EnergyValue kinetic_energy(const TargetDistribution& p1, const MaskSchedule& alpha,
                           const InterpolationSchedule& gamma, const QuadratureSpec& q);
EnergyValue conditional_kinetic_energy(const TargetDistribution& p1, const MaskSchedule& alpha,
                                       const InterpolationSchedule& gamma,
                                       const QuadratureSpec& q);
EnergyValue geodesic_energy(const TargetDistribution& p1, const MaskSchedule& alpha,
                            const InterpolationSchedule& gamma, const QuadratureSpec& q);

struct EnergyReport {
    EnergyValue Ek, Ec, Eg;
    EnergyValue scalar;
    EquivalenceConstants constants;
};

EnergyReport energy_report(const TargetDistribution& p1, const MaskSchedule& alpha,
                           const InterpolationSchedule& gamma, const QuadratureSpec& q);

// Point on the unit sphere holding square-root probabilities.
struct EmbeddingPoint {
    std::vector<double> y;
};

// Great-circle interpolation y0 cos(pi/2 gamma) + y1 sin(pi/2 gamma);
// endpoints must be unit-norm and orthogonal.
EmbeddingPoint geodesic_curve(const InterpolationSchedule& gamma, double t,
                              const EmbeddingPoint& y0, const EmbeddingPoint& y1);

// Riemann-discretized geodesic energy: sum of squared chord lengths over
// the gamma increments. gamma_values must be strictly increasing over [0,1].
double discrete_geodesic_energy(const std::vector<EmbeddingPoint>& points,
                                const std::vector<double>& gamma_values);

// pi tan(pi gamma/2) gamma_dot; diverges where gamma reaches 1.
double optimal_conditional_rate(const InterpolationSchedule& gamma, double t);

// Exact-enumeration NELBO; schedule-invariant for strictly increasing alpha.
double nelbo(const TargetDistribution& p1, const MaskSchedule& alpha,
             const QuadratureSpec& q);

struct LandscapeCell {
    double a = 0.0, b = 0.0;
    EnergyValue energy;
};

struct LandscapeGrid {
    double amin = 0.1, amax = 1.0, astep = 0.1;
    double bmin = 0.1, bmax = 1.0, bstep = 0.1;
};

// scalar_energy of beta-optimal(a,b) against a fixed gamma for every grid
// cell; cell order is row-major in (a,b) and independent of `jobs`.
std::vector<LandscapeCell> energy_landscape(const InterpolationSchedule& gamma,
                                            const LandscapeGrid& grid,
                                            const QuadratureSpec& q, int jobs = 1);

} // namespace mdm
