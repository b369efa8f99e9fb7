#include "mdm/schedules.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace mdm {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
} // namespace

// ---------------------------------------------------------------------------
// MonotoneCubic (Fritsch-Carlson)

MonotoneCubic::MonotoneCubic(std::vector<double> x, std::vector<double> y)
    : x_(std::move(x)), y_(std::move(y)) {
    const std::size_t n = x_.size();
    if (n < 2 || y_.size() != n) {
        throw parameter_error("tabulated schedule needs >=2 matching knots");
    }
    for (std::size_t i = 1; i < n; ++i) {
        if (!(x_[i] > x_[i - 1])) {
            throw parameter_error("tabulated schedule knots must be strictly increasing in t");
        }
    }
    std::vector<double> d(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        d[i] = (y_[i + 1] - y_[i]) / (x_[i + 1] - x_[i]);
    }
    m_.assign(n, 0.0);
    m_[0] = d[0];
    m_[n - 1] = d[n - 2];
    for (std::size_t i = 1; i + 1 < n; ++i) m_[i] = 0.5 * (d[i - 1] + d[i]);
    // Limit slopes so the interpolant preserves the data's local monotonicity.
    for (std::size_t i = 0; i + 1 < n; ++i) {
        if (d[i] == 0.0) {
            m_[i] = m_[i + 1] = 0.0;
            continue;
        }
        const double a = m_[i] / d[i];
        const double b = m_[i + 1] / d[i];
        if (a < 0.0) m_[i] = 0.0;
        if (b < 0.0) m_[i + 1] = 0.0;
        const double s = a * a + b * b;
        if (s > 9.0) {
            const double tau = 3.0 / std::sqrt(s);
            m_[i] = tau * a * d[i];
            m_[i + 1] = tau * b * d[i];
        }
    }
}

double MonotoneCubic::value(double t) const {
    const std::size_t n = x_.size();
    if (t <= x_.front()) return y_.front();
    if (t >= x_.back()) return y_.back();
    const auto it = std::upper_bound(x_.begin(), x_.end(), t);
    const std::size_t i = static_cast<std::size_t>(it - x_.begin()) - 1;
    const double h = x_[i + 1] - x_[i];
    const double s = (t - x_[i]) / h;
    const double s2 = s * s, s3 = s2 * s;
    const double h00 = 2 * s3 - 3 * s2 + 1;
    const double h10 = s3 - 2 * s2 + s;
    const double h01 = -2 * s3 + 3 * s2;
    const double h11 = s3 - s2;
    (void)n;
    return h00 * y_[i] + h10 * h * m_[i] + h01 * y_[i + 1] + h11 * h * m_[i + 1];
}

double MonotoneCubic::deriv(double t) const {
    if (t <= x_.front()) return m_.front();
    if (t >= x_.back()) return m_.back();
    const auto it = std::upper_bound(x_.begin(), x_.end(), t);
    const std::size_t i = static_cast<std::size_t>(it - x_.begin()) - 1;
    const double h = x_[i + 1] - x_[i];
    const double s = (t - x_[i]) / h;
    const double s2 = s * s;
    const double dh00 = (6 * s2 - 6 * s) / h;
    const double dh10 = 3 * s2 - 4 * s + 1;
    const double dh01 = (-6 * s2 + 6 * s) / h;
    const double dh11 = 3 * s2 - 2 * s;
    return dh00 * y_[i] + dh10 * m_[i] + dh01 * y_[i + 1] + dh11 * m_[i + 1];
}

namespace {

void check_unit_endpoints(double v0, double v1) {
    if (std::fabs(v0) > 1e-12 || std::fabs(v1 - 1.0) > 1e-12) {
        throw parameter_error("tabulated schedule must run from (0,0) to (1,1)");
    }
}

// Density of Beta(a,b) including the one-sided endpoint limits.
double beta_density_or_limit(double t, double a, double b) {
    if (t == 0.0) {
        if (a < 1.0) return kInf;
        return a == 1.0 ? std::exp(-log_beta(a, b)) : 0.0;
    }
    if (t == 1.0) {
        if (b < 1.0) return kInf;
        return b == 1.0 ? std::exp(-log_beta(a, b)) : 0.0;
    }
    return beta_pdf(t, a, b);
}

} // namespace

// ---------------------------------------------------------------------------
// InterpolationSchedule

InterpolationSchedule InterpolationSchedule::identity() {
    InterpolationSchedule s;
    s.kind_ = Kind::Identity;
    s.ep_ = {true, 1.0, 1.0, 1.0, 1.0};
    s.f_ = [](double t) { return t; };
    s.df_ = [](double) { return 1.0; };
    s.cf_ = [](double t) { return 1.0 - t; };
    return s;
}

InterpolationSchedule InterpolationSchedule::beta(double a, double b) {
    const double lb = log_beta(a, b); // validates the parameters
    InterpolationSchedule s;
    s.kind_ = Kind::BetaCdf;
    s.a_ = a;
    s.b_ = b;
    s.ep_.known = true;
    s.ep_.p0 = a;
    s.ep_.c0 = std::exp(-lb) / a;
    s.ep_.p1 = b;
    s.ep_.c1 = std::exp(-lb) / b;
    s.f_ = [a, b](double t) { return beta_cdf(t, a, b); };
    s.df_ = [a, b](double t) { return beta_density_or_limit(t, a, b); };
    s.cf_ = [a, b](double t) { return beta_cdf(1.0 - t, b, a); };
    return s;
}

InterpolationSchedule InterpolationSchedule::tabulated(std::vector<double> t,
                                                       std::vector<double> g) {
    check_unit_endpoints(g.front(), g.back());
    g.front() = 0.0;
    g.back() = 1.0;
    auto spline = std::make_shared<MonotoneCubic>(std::move(t), std::move(g));
    InterpolationSchedule s;
    s.kind_ = Kind::Tabulated;
    s.f_ = [spline](double x) { return spline->value(x); };
    s.df_ = [spline](double x) { return spline->deriv(x); };
    s.cf_ = [spline](double x) { return 1.0 - spline->value(x); };
    return s;
}

double InterpolationSchedule::inverse(double u) const {
    if (u <= 0.0) return 0.0;
    if (u >= 1.0) return 1.0;
    double lo = 0.0, hi = 1.0;
    double t = u; // decent initial guess for near-identity schedules
    for (int iter = 0; iter < 200; ++iter) {
        const double g = f_(t) - u;
        if (g > 0.0) hi = t; else lo = t;
        const double dg = df_(t);
        double next = (dg > 0.0 && std::isfinite(dg)) ? t - g / dg : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::fabs(next - t) < 1e-16 + 1e-15 * t) { t = next; break; }
        t = next;
    }
    return t;
}

std::string InterpolationSchedule::describe() const {
    std::ostringstream os;
    switch (kind_) {
        case Kind::Identity: os << "identity"; break;
        case Kind::BetaCdf: os << "beta-cdf(" << a_ << "," << b_ << ")"; break;
        case Kind::ArcsinSqrt: os << "arcsin-sqrt"; break;
        case Kind::Tabulated: os << "tabulated"; break;
    }
    return os.str();
}

// ---------------------------------------------------------------------------
// MaskSchedule

MaskSchedule MaskSchedule::linear() {
    MaskSchedule s;
    s.kind_ = Kind::Linear;
    s.ep_ = {true, 1.0, 1.0, 1.0, 1.0};
    s.f_ = [](double t) { return t; };
    s.df_ = [](double) { return 1.0; };
    s.cf_ = [](double t) { return 1.0 - t; };
    return s;
}

MaskSchedule MaskSchedule::sine() {
    MaskSchedule s;
    s.kind_ = Kind::Sine;
    s.ep_ = {true, 1.0, M_PI / 2.0, 2.0, M_PI * M_PI / 8.0};
    s.f_ = [](double t) {
        if (t <= 0.0) return 0.0;
        if (t >= 1.0) return 1.0;
        return std::sin(M_PI_2 * t);
    };
    s.df_ = [](double t) { return M_PI_2 * std::cos(M_PI_2 * t); };
    s.cf_ = [](double t) {
        if (t <= 0.0) return 1.0;
        if (t >= 1.0) return 0.0;
        const double sn = std::sin(M_PI_2 * t);
        const double cs = std::cos(M_PI_2 * t);
        return cs * cs / (1.0 + sn); // 1 - sin without cancellation
    };
    return s;
}

MaskSchedule MaskSchedule::squared_sine() {
    MaskSchedule s;
    s.kind_ = Kind::SquaredSine;
    s.ep_ = {true, 2.0, M_PI * M_PI / 4.0, 2.0, M_PI * M_PI / 4.0};
    s.f_ = [](double t) {
        if (t <= 0.0) return 0.0;
        if (t >= 1.0) return 1.0;
        const double v = std::sin(M_PI_2 * t);
        return v * v;
    };
    s.df_ = [](double t) { return M_PI_2 * std::sin(M_PI * t); };
    s.cf_ = [](double t) {
        if (t <= 0.0) return 1.0;
        if (t >= 1.0) return 0.0;
        const double cs = std::cos(M_PI_2 * t);
        return cs * cs;
    };
    return s;
}

MaskSchedule MaskSchedule::beta_optimal(double a, double b) {
    const double lb = log_beta(a, b);
    MaskSchedule s;
    s.kind_ = Kind::BetaOptimal;
    s.a_ = a;
    s.b_ = b;
    const double ca = std::exp(-lb) / a;
    const double cb = std::exp(-lb) / b;
    s.ep_.known = true;
    s.ep_.p0 = 2.0 * a;
    s.ep_.c0 = 0.25 * M_PI * M_PI * ca * ca;
    s.ep_.p1 = 2.0 * b;
    s.ep_.c1 = 0.25 * M_PI * M_PI * cb * cb;
    s.f_ = [a, b](double t) {
        if (t <= 0.0) return 0.0;
        if (t >= 1.0) return 1.0;
        const double v = std::sin(M_PI_2 * beta_cdf(t, a, b));
        return v * v;
    };
    s.df_ = [a, b](double t) {
        return M_PI_2 * std::sin(M_PI * beta_cdf(t, a, b)) * beta_density_or_limit(t, a, b);
    };
    s.cf_ = [a, b](double t) {
        if (t <= 0.0) return 1.0;
        if (t >= 1.0) return 0.0;
        const double v = std::sin(M_PI_2 * beta_cdf(1.0 - t, b, a));
        return v * v; // cos^2(pi/2 I_t(a,b)) via the CDF symmetry
    };
    return s;
}

MaskSchedule MaskSchedule::tabulated(std::vector<double> t, std::vector<double> v) {
    check_unit_endpoints(v.front(), v.back());
    v.front() = 0.0;
    v.back() = 1.0;
    auto spline = std::make_shared<MonotoneCubic>(std::move(t), std::move(v));
    MaskSchedule s;
    s.kind_ = Kind::Tabulated;
    s.f_ = [spline](double x) { return spline->value(x); };
    s.df_ = [spline](double x) { return spline->deriv(x); };
    s.cf_ = [spline](double x) { return 1.0 - spline->value(x); };
    return s;
}

MaskSchedule MaskSchedule::from_name(const std::string& name, double a, double b) {
    if (name == "linear") return linear();
    if (name == "sine") return sine();
    if (name == "squared-sine") return squared_sine();
    if (name == "beta-opt" || name == "beta-optimal") return beta_optimal(a, b);
    throw parameter_error("unknown mask schedule kind: " + name);
}

double MaskSchedule::sigma(double t) const {
    if (!(t > 0.0 && t <= 1.0)) {
        if (t == 0.0) throw divergence_error("sigma diverges at t=0 (alpha(0)=0)");
        throw parameter_error("sigma requires t in (0,1]");
    }
    const double a = f_(t);
    if (a <= 0.0) throw divergence_error("sigma diverges where alpha vanishes");
    return df_(t) / a;
}

std::string MaskSchedule::describe() const {
    std::ostringstream os;
    switch (kind_) {
        case Kind::Linear: os << "linear"; break;
        case Kind::Sine: os << "sine"; break;
        case Kind::SquaredSine: os << "squared-sine"; break;
        case Kind::BetaOptimal: os << "beta-optimal(" << a_ << "," << b_ << ")"; break;
        case Kind::Tabulated: os << "tabulated"; break;
        case Kind::FromInterpolation: os << "optimal-of-gamma"; break;
    }
    return os.str();
}

// ---------------------------------------------------------------------------
// Coupling between the two schedule families

MaskSchedule optimal_alpha(const InterpolationSchedule& gamma) {
    MaskSchedule s;
    s.kind_ = MaskSchedule::Kind::FromInterpolation;
    if (gamma.kind() == InterpolationSchedule::Kind::BetaCdf) {
        // Same closed form; keep the parameter metadata.
        return MaskSchedule::beta_optimal(gamma.a(), gamma.b());
    }
    const auto& gep = gamma.endpoint();
    if (gep.known) {
        s.ep_.known = true;
        s.ep_.p0 = 2.0 * gep.p0;
        s.ep_.c0 = 0.25 * M_PI * M_PI * gep.c0 * gep.c0;
        s.ep_.p1 = 2.0 * gep.p1;
        s.ep_.c1 = 0.25 * M_PI * M_PI * gep.c1 * gep.c1;
    }
    auto gf = gamma; // value copy; schedules are immutable
    s.f_ = [gf](double t) {
        if (t <= 0.0) return 0.0;
        if (t >= 1.0) return 1.0;
        const double v = std::sin(M_PI_2 * gf.value(t));
        return v * v;
    };
    s.df_ = [gf](double t) { return M_PI_2 * std::sin(M_PI * gf.value(t)) * gf.deriv(t); };
    s.cf_ = [gf](double t) {
        if (t <= 0.0) return 1.0;
        if (t >= 1.0) return 0.0;
        const double v = std::sin(M_PI_2 * gf.complement(t));
        return v * v; // cos^2(pi/2 gamma)
    };
    return s;
}

InterpolationSchedule gamma_from_alpha(const MaskSchedule& alpha) {
    InterpolationSchedule s;
    s.kind_ = InterpolationSchedule::Kind::ArcsinSqrt;
    const auto& aep = alpha.endpoint();
    if (aep.known) {
        s.ep_.known = true;
        s.ep_.p0 = 0.5 * aep.p0;
        s.ep_.c0 = (2.0 / M_PI) * std::sqrt(aep.c0);
        s.ep_.p1 = 0.5 * aep.p1;
        s.ep_.c1 = (2.0 / M_PI) * std::sqrt(aep.c1);
    }
    auto af = alpha;
    s.f_ = [af](double t) {
        if (t <= 0.0) return 0.0;
        if (t >= 1.0) return 1.0;
        return (2.0 / M_PI) * std::asin(std::sqrt(af.alpha(t)));
    };
    s.df_ = [af](double t) {
        const double a = af.alpha(t);
        const double denom = M_PI * std::sqrt(a * af.alpha_complement(t));
        if (denom == 0.0) return kInf;
        return af.alpha_dot(t) / denom;
    };
    s.cf_ = [af](double t) {
        if (t <= 0.0) return 1.0;
        if (t >= 1.0) return 0.0;
        return (2.0 / M_PI) * std::asin(std::sqrt(af.alpha_complement(t)));
    };
    return s;
}

// ---------------------------------------------------------------------------
// Validation

namespace {

template <typename Value, typename Deriv>
ValidationReport validate_impl(const Value& f, const Deriv& df, int grid_points) {
    ValidationReport r;
    r.value_at_0 = f(0.0);
    r.value_at_1 = f(1.0);
    r.endpoints_ok = std::fabs(r.value_at_0) <= 1e-12 && std::fabs(r.value_at_1 - 1.0) <= 1e-12;

    r.monotone = true;
    double prev = r.value_at_0;
    for (int i = 1; i < grid_points; ++i) {
        const double t = static_cast<double>(i) / (grid_points - 1);
        const double v = f(t);
        if (!(v > prev)) {
            r.monotone = false;
            r.first_violation_t = t;
            break;
        }
        prev = v;
    }

    // Central differences at interior points, away from possibly singular ends.
    const double h = 1e-6;
    double worst = 0.0;
    for (int i = 1; i <= 99; ++i) {
        const double t = 0.01 * i;
        const double fd = (f(t + h) - f(t - h)) / (2.0 * h);
        const double d = df(t);
        const double denom = std::max(std::fabs(d), 1e-12);
        worst = std::max(worst, std::fabs(fd - d) / denom);
    }
    r.max_derivative_residual = worst;
    r.derivative_consistent = worst < 1e-6;
    return r;
}

} // namespace

ValidationReport validate_schedule(const MaskSchedule& s, int grid_points) {
    return validate_impl([&](double t) { return s.alpha(t); },
                         [&](double t) { return s.alpha_dot(t); }, grid_points);
}

ValidationReport validate_schedule(const InterpolationSchedule& s, int grid_points) {
    return validate_impl([&](double t) { return s.value(t); },
                         [&](double t) { return s.deriv(t); }, grid_points);
}

} // namespace mdm
