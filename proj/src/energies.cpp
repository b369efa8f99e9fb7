#include "mdm/energies.hpp"

#include <cmath>
#include <limits>
#include <thread>

namespace mdm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

EnergyValue diverged_value() {
    EnergyValue v;
    v.value = kInf;
    v.diverged = true;
    v.trusted = true;
    return v;
}

// Quadrature nodes in u = gamma(t) space with the matching t and gamma_dot.
struct UGrid {
    std::vector<double> u, w, t, gdot;
};

UGrid build_ugrid(const InterpolationSchedule& g, double eps, int middle_panels,
                  int nodes, double end_w) {
    UGrid grid;
    const auto edges = graded_edges(eps, 1.0 - eps, middle_panels, end_w, end_w);
    const auto& nw = gauss_legendre(nodes);
    for (std::size_t p = 0; p + 1 < edges.size(); ++p) {
        const double c = 0.5 * (edges[p] + edges[p + 1]);
        const double h = 0.5 * (edges[p + 1] - edges[p]);
        for (const auto& [x, w] : nw) {
            const double u = c + h * x;
            grid.u.push_back(u);
            grid.w.push_back(h * w);
            const double t = g.inverse(u);
            grid.t.push_back(t);
            grid.gdot.push_back(g.deriv(t));
        }
    }
    return grid;
}

// Scalar integrand in u-space: A'(u)^2 / (A (1-A)) with A(u) = alpha(t(u)).
double scalar_node(const MaskSchedule& a, double t, double gdot) {
    const double A = a.alpha(t);
    const double Ac = a.alpha_complement(t);
    const double Ap = a.alpha_dot(t) / gdot;
    const double denom = A * Ac;
    if (!(denom > 0.0)) return kInf;
    return Ap * Ap / denom;
}

// One-sided analytic tail of the u-space integral over [0, eps] for
// A ~ C u^e: integrand ~ e^2 C u^(e-2); finite only when e > 1.
double power_tail(double e, double C, double eps) {
    return e * e * C * std::pow(eps, e - 1.0) / (e - 1.0);
}

} // namespace

// Precomputes u-grids for a fixed gamma; evaluates the scalar energy for
// many alpha candidates (landscape cells) without redoing the inversions.
class ScalarIntegrator {
public:
    ScalarIntegrator(const InterpolationSchedule& g, const QuadratureSpec& q)
        : g_(g), q_(q) {
        q_.validate();
        base_ = build_ugrid(g_, q_.eps, q_.panels, q_.nodes, q_.eps);
        if (q_.richardson) {
            fine_ = build_ugrid(g_, q_.eps, 2 * q_.panels, q_.nodes, 0.5 * q_.eps);
        }
    }

    struct Parts {
        EnergyValue ev;
        double base_interior = 0.0;
        double tails = 0.0;
    };

    Parts eval(const MaskSchedule& a) const {
        Parts out;
        const auto& aep = a.endpoint();
        const auto& gep = g_.endpoint();
        const bool known = aep.known && gep.known;
        if (known) {
            // Exponent test: integrable iff alpha vanishes/saturates strictly
            // faster than gamma at each end.
            if (!(aep.p0 > gep.p0) || !(aep.p1 > gep.p1)) {
                out.ev = diverged_value();
                return out;
            }
            const double e0 = aep.p0 / gep.p0;
            const double C0 = aep.c0 * std::pow(gep.c0, -e0);
            const double e1 = aep.p1 / gep.p1;
            const double C1 = aep.c1 * std::pow(gep.c1, -e1);
            out.tails = power_tail(e0, C0, q_.eps) + power_tail(e1, C1, q_.eps);
        }

        out.base_interior = interior(a, base_);
        double fine_interior = out.base_interior;
        if (q_.richardson) fine_interior = interior(a, fine_);

        if (!std::isfinite(out.base_interior) || !std::isfinite(fine_interior)) {
            out.ev = diverged_value();
            out.ev.trusted = known;
            return out;
        }

        if (!known) {
            // Endpoint behavior unknown (tabulated data): estimate the local
            // power of the integrand near each end, flag divergence when the
            // estimated exponent is non-integrable or refinement grows > 10%.
            double tail0 = 0.0, tail1 = 0.0;
            const bool ok0 = estimate_tail(a, q_.eps, false, tail0);
            const bool ok1 = estimate_tail(a, q_.eps, true, tail1);
            const bool grew = fine_interior > 1.10 * out.base_interior + 1e-12;
            if (!ok0 || !ok1 || grew) {
                out.ev = diverged_value();
                out.ev.trusted = false;
                return out;
            }
            out.tails = tail0 + tail1;
        }

        out.ev.value = fine_interior + out.tails;
        const double base_total = out.base_interior + out.tails;
        out.ev.richardson_delta =
            std::fabs(out.ev.value - base_total) / std::max(std::fabs(out.ev.value), 1e-300);
        out.ev.trusted = known && out.ev.richardson_delta < 1e-8;
        return out;
    }

    const UGrid& base_grid() const { return base_; }
    const QuadratureSpec& spec() const { return q_; }
    const InterpolationSchedule& gamma() const { return g_; }

private:
    double interior(const MaskSchedule& a, const UGrid& grid) const {
        double acc = 0.0;
        for (std::size_t i = 0; i < grid.u.size(); ++i) {
            acc += grid.w[i] * scalar_node(a, grid.t[i], grid.gdot[i]);
        }
        return acc;
    }

    bool estimate_tail(const MaskSchedule& a, double eps, bool upper, double& tail) const {
        auto h_at = [&](double u) {
            if (upper) u = 1.0 - u;
            const double t = g_.inverse(u);
            return scalar_node(a, t, g_.deriv(t));
        };
        const double ha = h_at(2.0 * eps);
        const double hb = h_at(8.0 * eps);
        if (!(ha > 0.0) || !(hb > 0.0)) {
            tail = 0.0;
            return true; // integrand vanishes at this end
        }
        const double p = std::log(ha / hb) / std::log(0.25);
        if (p <= -0.95) return false; // (nearly) non-integrable
        tail = ha * std::pow(2.0 * eps, -p) * std::pow(eps, p + 1.0) / (p + 1.0);
        return true;
    }

    InterpolationSchedule g_;
    QuadratureSpec q_;
    UGrid base_, fine_;
};

EquivalenceConstants equivalence_constants(int n, int d) {
    StateSpace space(n, d);
    double ck = 0.0;
    for (std::size_t i = 0; i < space.size(); ++i) {
        ck += space.mask_count(space.state(i));
    }
    const double formula = n * std::pow(d + 1.0, n - 1.0);
    if (std::fabs(ck - formula) > 1e-9 * formula) {
        throw std::logic_error("C_k enumeration disagrees with n(d+1)^(n-1)");
    }
    EquivalenceConstants c;
    c.Ck = ck;
    c.Cc = n * std::pow(2.0, n - 1.0);
    c.Cg = n;
    c.C1 = c.Ck / c.Cc;
    c.C2 = c.Cc / c.Cg;
    return c;
}

EnergyValue scalar_energy(const MaskSchedule& alpha, const InterpolationSchedule& gamma,
                          const QuadratureSpec& q) {
    return ScalarIntegrator(gamma, q).eval(alpha).ev;
}

namespace {

enum class EnumKind { Kinetic, CondKinetic, Geodesic };

// Time-slice value of the enumerated energy (the expectation inside the
// time integral, before the 1/gamma_dot weight).
double bracket_at(EnumKind kind, const TargetDistribution& p1, const MaskSchedule& alpha,
                  double t) {
    const auto& space = p1.space();
    const int n = space.n(), d = space.d(), mask = space.mask();
    const double a = alpha.alpha(t);
    const double ac = alpha.alpha_complement(t);
    const double ad = alpha.alpha_dot(t);
    const double sigma = ad / a;

    switch (kind) {
        case EnumKind::Kinetic: {
            // sum_z p_t(z) sum_{x != z} Q(z,x)^2 / p_t(x) with Q = sigma p_t(x)/p_t(z)
            const auto snap = flow_snapshot(p1, a, t);
            double acc = 0.0;
            for (std::size_t zi = 0; zi < space.size(); ++zi) {
                const double pz = snap.marginals[zi];
                if (pz <= 0.0) continue;
                State z = space.state(zi);
                for (int i = 0; i < n; ++i) {
                    if (z[i] != mask) continue;
                    State x = z;
                    for (int v = 0; v < d; ++v) {
                        x[i] = v;
                        const double px = snap.marginals[space.index(x)];
                        if (px > 0.0) acc += px / pz;
                    }
                    x[i] = mask;
                }
            }
            return sigma * sigma * acc;
        }
        case EnumKind::CondKinetic: {
            // sum_{x1} p1 sum_{z ~ p_{t|1}} sum_x Q_{t|1}^2 / p_{t|1}(x|x1)
            const double rate = sigma * a / ac;
            std::vector<double> powa(n + 1, 1.0), powc(n + 1, 1.0);
            for (int k = 1; k <= n; ++k) {
                powa[k] = powa[k - 1] * a;
                powc[k] = powc[k - 1] * ac;
            }
            double per_x1 = 0.0;
            for (unsigned s = 1; s < (1u << n); ++s) {
                const int m = __builtin_popcount(s);
                const double pz = powa[n - m] * powc[m];
                const double px = powa[n - m + 1] * powc[m - 1];
                per_x1 += m * pz * rate * rate / px;
            }
            // The inner value is the same for every clean x1; the p1-weighted
            // sum over x1 therefore multiplies by 1.
            return per_x1;
        }
        case EnumKind::Geodesic: {
            // Per token: E_{z^i} [4 y_dot^2 / p_{t|1}(z^i)] with y = sqrt(p);
            // the expectation weight cancels the 1/p factor.
            const double yd_clean = ad / (2.0 * std::sqrt(a));
            const double yd_mask = ad / (2.0 * std::sqrt(ac));
            double per_token = 4.0 * (yd_clean * yd_clean + yd_mask * yd_mask);
            // Independent of x1's token values, so the p1 expectation is 1
            // and the token sum contributes a factor n.
            return n * per_token;
        }
    }
    return 0.0;
}

EnergyValue enumerated_energy(EnumKind kind, const TargetDistribution& p1,
                              const MaskSchedule& alpha, const InterpolationSchedule& gamma,
                              const QuadratureSpec& q) {
    ScalarIntegrator integ(gamma, q);
    const auto parts = integ.eval(alpha);
    if (parts.ev.diverged) return parts.ev;

    const auto consts = equivalence_constants(p1.n(), p1.d());
    const double C = kind == EnumKind::Kinetic ? consts.Ck
                   : kind == EnumKind::CondKinetic ? consts.Cc
                                                   : consts.Cg;
    const auto& grid = integ.base_grid();
    double acc = 0.0;
    for (std::size_t i = 0; i < grid.u.size(); ++i) {
        const double g2 = grid.gdot[i] * grid.gdot[i];
        acc += grid.w[i] * bracket_at(kind, p1, alpha, grid.t[i]) / g2;
    }
    EnergyValue out = parts.ev;
    // Enumerated interior plus the scaled endpoint tails (and the scalar
    // route's refinement correction, which shares the same constant factor).
    out.value = acc + C * (parts.ev.value - parts.base_interior);
    return out;
}

} // namespace

EnergyValue kinetic_energy(const TargetDistribution& p1, const MaskSchedule& alpha,
                           const InterpolationSchedule& gamma, const QuadratureSpec& q) {
    return enumerated_energy(EnumKind::Kinetic, p1, alpha, gamma, q);
}

EnergyValue conditional_kinetic_energy(const TargetDistribution& p1, const MaskSchedule& alpha,
                                       const InterpolationSchedule& gamma,
                                       const QuadratureSpec& q) {
    return enumerated_energy(EnumKind::CondKinetic, p1, alpha, gamma, q);
}

EnergyValue geodesic_energy(const TargetDistribution& p1, const MaskSchedule& alpha,
                            const InterpolationSchedule& gamma, const QuadratureSpec& q) {
    return enumerated_energy(EnumKind::Geodesic, p1, alpha, gamma, q);
}

EnergyReport energy_report(const TargetDistribution& p1, const MaskSchedule& alpha,
                           const InterpolationSchedule& gamma, const QuadratureSpec& q) {
    EnergyReport r;
    r.constants = equivalence_constants(p1.n(), p1.d());
    r.scalar = scalar_energy(alpha, gamma, q);
    r.Ek = kinetic_energy(p1, alpha, gamma, q);
    r.Ec = conditional_kinetic_energy(p1, alpha, gamma, q);
    r.Eg = geodesic_energy(p1, alpha, gamma, q);
    return r;
}

EmbeddingPoint geodesic_curve(const InterpolationSchedule& gamma, double t,
                              const EmbeddingPoint& y0, const EmbeddingPoint& y1) {
    if (y0.y.size() != y1.y.size()) throw parameter_error("embedding dimensions differ");
    double n0 = 0.0, n1 = 0.0, dot = 0.0;
    for (std::size_t i = 0; i < y0.y.size(); ++i) {
        n0 += y0.y[i] * y0.y[i];
        n1 += y1.y[i] * y1.y[i];
        dot += y0.y[i] * y1.y[i];
    }
    if (std::fabs(n0 - 1.0) > 1e-12 || std::fabs(n1 - 1.0) > 1e-12) {
        throw parameter_error("embedding endpoints must be unit norm");
    }
    if (std::fabs(dot) > 1e-10) {
        throw parameter_error("embedding endpoints must be orthogonal");
    }
    const double g = gamma.value(t);
    const double c = std::cos(M_PI_2 * g), s = std::sin(M_PI_2 * g);
    EmbeddingPoint out;
    out.y.resize(y0.y.size());
    for (std::size_t i = 0; i < y0.y.size(); ++i) {
        out.y[i] = c * y0.y[i] + s * y1.y[i];
    }
    return out;
}

double discrete_geodesic_energy(const std::vector<EmbeddingPoint>& points,
                                const std::vector<double>& gamma_values) {
    if (points.size() < 2 || points.size() != gamma_values.size()) {
        throw parameter_error("discrete geodesic energy needs >= 2 matched points");
    }
    if (std::fabs(gamma_values.front()) > 1e-12 ||
        std::fabs(gamma_values.back() - 1.0) > 1e-12) {
        throw parameter_error("gamma values must span [0,1]");
    }
    double acc = 0.0;
    for (std::size_t k = 0; k + 1 < points.size(); ++k) {
        const double dg = gamma_values[k + 1] - gamma_values[k];
        if (!(dg > 0.0)) throw parameter_error("gamma values must be strictly increasing");
        double chord2 = 0.0;
        for (std::size_t i = 0; i < points[k].y.size(); ++i) {
            const double dy = points[k + 1].y[i] - points[k].y[i];
            chord2 += dy * dy;
        }
        acc += chord2 / dg;
    }
    return acc;
}

double optimal_conditional_rate(const InterpolationSchedule& gamma, double t) {
    const double g = gamma.value(t);
    if (g >= 1.0) throw divergence_error("optimal conditional rate diverges at gamma = 1");
    return M_PI * std::tan(M_PI_2 * g) * gamma.deriv(t);
}

double nelbo(const TargetDistribution& p1, const MaskSchedule& alpha,
             const QuadratureSpec& q) {
    q.validate();
    const auto& space = p1.space();
    const int n = space.n(), mask = space.mask();
    if (n > 20) throw parameter_error("nelbo enumeration capped at n <= 20");
    if (!(alpha.alpha(1.0 - q.eps) < 1.0)) {
        throw parameter_error("nelbo requires alpha < 1 in the interior");
    }

    // c[m] = E_{x1} sum over masked sets of size m of the summed token
    // cross-entropies under the exact posterior given the unmasked context.
    std::vector<double> c(n + 1, 0.0);
    for (std::size_t xi = 0; xi < space.clean_size(); ++xi) {
        const double px1 = p1.prob(xi);
        if (px1 <= 0.0) continue;
        const State x1 = space.clean_state(xi);
        for (unsigned s = 1; s < (1u << n); ++s) {
            State z = x1;
            for (int i = 0; i < n; ++i) {
                if (s & (1u << i)) z[i] = mask;
            }
            double loss = 0.0;
            for (int i = 0; i < n; ++i) {
                if (!(s & (1u << i))) continue;
                loss -= std::log(token_posterior(p1, z, i)[static_cast<std::size_t>(x1[i])]);
            }
            c[__builtin_popcount(s)] += px1 * loss;
        }
    }

    // Integrand alpha_dot * F(alpha) with F(v) = sum_m v^(n-m) (1-v)^(m-1) c_m.
    auto F = [&](double v, double vc) {
        double acc = 0.0;
        for (int m = 1; m <= n; ++m) {
            acc += c[m] * std::pow(v, n - m) * std::pow(vc, m - 1);
        }
        return acc;
    };
    const double interior = integrate_graded(
        [&](double t) {
            return alpha.alpha_dot(t) * F(alpha.alpha(t), alpha.alpha_complement(t));
        },
        q.eps, 1.0 - q.eps, q.panels, q.nodes, q.eps, q.eps);

    // Exact substitution v = alpha(t) over the trimmed endpoint slivers.
    const double v0 = alpha.alpha(q.eps);
    const double v1c = alpha.alpha_complement(1.0 - q.eps);
    double head = 0.0, tail = 0.0;
    for (int m = 1; m <= n; ++m) {
        const double B = std::exp(log_beta(n - m + 1.0, m));
        head += c[m] * B * beta_cdf(v0, n - m + 1.0, m);
        tail += c[m] * B * beta_cdf(v1c, m, n - m + 1.0);
    }
    return interior + head + tail;
}

std::vector<LandscapeCell> energy_landscape(const InterpolationSchedule& gamma,
                                            const LandscapeGrid& grid,
                                            const QuadratureSpec& q, int jobs) {
    if (!(grid.astep > 0.0) || !(grid.bstep > 0.0) || grid.amin > grid.amax ||
        grid.bmin > grid.bmax || grid.amin <= 0.0 || grid.bmin <= 0.0 ||
        grid.amax > 100.0 || grid.bmax > 100.0) {
        throw parameter_error("landscape grid parameters must lie in (0,100]");
    }
    std::vector<double> as, bs;
    const int na = static_cast<int>(std::floor((grid.amax - grid.amin) / grid.astep + 1e-9)) + 1;
    const int nb = static_cast<int>(std::floor((grid.bmax - grid.bmin) / grid.bstep + 1e-9)) + 1;
    for (int k = 0; k < na; ++k) as.push_back(grid.amin + k * grid.astep);
    for (int k = 0; k < nb; ++k) bs.push_back(grid.bmin + k * grid.bstep);

    const ScalarIntegrator integ(gamma, q);
    std::vector<LandscapeCell> cells(as.size() * bs.size());
    auto work = [&](std::size_t begin, std::size_t stride) {
        for (std::size_t k = begin; k < cells.size(); k += stride) {
            const double a = as[k / bs.size()];
            const double b = bs[k % bs.size()];
            cells[k].a = a;
            cells[k].b = b;
            cells[k].energy = integ.eval(MaskSchedule::beta_optimal(a, b)).ev;
        }
    };
    jobs = std::max(1, jobs);
    if (jobs == 1) {
        work(0, 1);
    } else {
        std::vector<std::thread> pool;
        for (int j = 0; j < jobs; ++j) pool.emplace_back(work, j, jobs);
        for (auto& th : pool) th.join();
    }
    return cells;
}

} // namespace mdm
