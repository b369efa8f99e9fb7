#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "mdm/special.hpp"

namespace mdm {

// Leading-order power behavior of a monotone [0,1] -> [0,1] schedule:
//   f(t)   ~ c0 * t^p0        as t -> 0
//   1-f(t) ~ c1 * (1-t)^p1    as t -> 1
// Known analytically for all built-in kinds; unknown for tabulated data.
struct EndpointPower {
    bool known = false;
    double p0 = 0.0, c0 = 0.0;
    double p1 = 0.0, c1 = 0.0;
};

// Shape-preserving (Fritsch-Carlson) cubic through strictly increasing data.
class MonotoneCubic {
public:
    MonotoneCubic(std::vector<double> x, std::vector<double> y);
    double value(double t) const;
    double deriv(double t) const;

private:
    std::vector<double> x_, y_, m_; // knots, values, knot slopes
};

// Interpolation schedule gamma(t): strictly increasing, gamma(0)=0, gamma(1)=1.
class InterpolationSchedule {
public:
    enum class Kind { Identity, BetaCdf, ArcsinSqrt, Tabulated };

    static InterpolationSchedule identity();
    static InterpolationSchedule beta(double a, double b);
    static InterpolationSchedule tabulated(std::vector<double> t, std::vector<double> g);

    double value(double t) const { return f_(t); }
    double deriv(double t) const { return df_(t); }
    // 1 - gamma(t) without cancellation near t = 1.
    double complement(double t) const { return cf_(t); }
    // Inverse by monotone bisection/Newton; u in [0,1].
    double inverse(double u) const;

    Kind kind() const { return kind_; }
    double a() const { return a_; }
    double b() const { return b_; }
    const EndpointPower& endpoint() const { return ep_; }
    std::string describe() const;

private:
    friend class MaskSchedule;
    friend InterpolationSchedule gamma_from_alpha(const class MaskSchedule&);
    InterpolationSchedule() = default;

    Kind kind_ = Kind::Identity;
    double a_ = 0.0, b_ = 0.0;
    EndpointPower ep_;
    std::function<double(double)> f_, df_, cf_;
};

// Mask schedule alpha(t): probability that a token is already clean at time t;
// alpha(0)=0 (all masked), alpha(1)=1 (fully unmasked), strictly increasing.
class MaskSchedule {
public:
    enum class Kind { Linear, Sine, SquaredSine, BetaOptimal, Tabulated, FromInterpolation };

    static MaskSchedule linear();
    static MaskSchedule sine();
    static MaskSchedule squared_sine();
    static MaskSchedule beta_optimal(double a, double b);
    static MaskSchedule tabulated(std::vector<double> t, std::vector<double> v);
    static MaskSchedule from_name(const std::string& name, double a = 0.0, double b = 0.0);

    double alpha(double t) const { return f_(t); }
    double alpha_dot(double t) const { return df_(t); }
    // 1 - alpha(t) without cancellation near t = 1.
    double alpha_complement(double t) const { return cf_(t); }
    // sigma(t) = alpha_dot/alpha; throws divergence_error at t=0 where alpha=0.
    double sigma(double t) const;

    Kind kind() const { return kind_; }
    double a() const { return a_; }
    double b() const { return b_; }
    const EndpointPower& endpoint() const { return ep_; }
    std::string describe() const;

private:
    friend MaskSchedule optimal_alpha(const InterpolationSchedule&);
    MaskSchedule() = default;

    Kind kind_ = Kind::Linear;
    double a_ = 0.0, b_ = 0.0;
    EndpointPower ep_;
    std::function<double(double)> f_, df_, cf_;
};

// Optimal coupling: alpha(t) = sin^2(pi/2 * gamma(t)).
MaskSchedule optimal_alpha(const InterpolationSchedule& gamma);

// Inverse coupling: gamma(t) = (2/pi) * arcsin(sqrt(alpha(t))).
InterpolationSchedule gamma_from_alpha(const MaskSchedule& alpha);

// Grid-based validity report (endpoints, monotonicity, derivative consistency).
struct ValidationReport {
    double value_at_0 = 0.0;
    double value_at_1 = 0.0;
    bool endpoints_ok = false;
    bool monotone = false;
    double first_violation_t = -1.0; // -1 when monotone
    double max_derivative_residual = 0.0; // relative, interior points
    bool derivative_consistent = false;

    bool pass() const { return endpoints_ok && monotone && derivative_consistent; }
};

ValidationReport validate_schedule(const MaskSchedule& s, int grid_points = 1001);
ValidationReport validate_schedule(const InterpolationSchedule& s, int grid_points = 1001);

} // namespace mdm
