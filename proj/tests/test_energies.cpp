#include <doctest.h>

#include <cmath>

#include "mdm/energies.hpp"
#include "mdm/rng.hpp"
#include "oracles.hpp"

using namespace mdm;

namespace {
const QuadratureSpec kQuad{};
const double kPi2 = M_PI * M_PI;
} // namespace

TEST_CASE("scalar energy closed-form values") {
    for (const auto& g :
         {InterpolationSchedule::identity(), InterpolationSchedule::beta(0.5, 0.5),
          InterpolationSchedule::beta(0.2, 0.8), InterpolationSchedule::beta(3, 1.5)}) {
        const auto v = scalar_energy(optimal_alpha(g), g, kQuad);
        REQUIRE(!v.diverged);
        CHECK(std::fabs(v.value - kPi2) < 1e-6);
        CHECK(v.trusted);
    }
    const auto mismatched = scalar_energy(MaskSchedule::squared_sine(),
                                          InterpolationSchedule::beta(0.5, 0.5), kQuad);
    CHECK(std::fabs(mismatched.value - std::pow(M_PI, 4) / 8.0) < 1e-6);
    CHECK(scalar_energy(MaskSchedule::linear(), InterpolationSchedule::identity(), kQuad)
              .diverged);
}

TEST_CASE("scalar energy against adaptive-quadrature oracle") {
    struct Case {
        MaskSchedule a;
        InterpolationSchedule g;
    };
    const Case cases[] = {
        {MaskSchedule::squared_sine(), InterpolationSchedule::identity()},
        {MaskSchedule::squared_sine(), InterpolationSchedule::beta(0.5, 0.5)},
        {MaskSchedule::beta_optimal(0.9, 0.6), InterpolationSchedule::beta(0.4, 0.4)},
    };
    for (const auto& c : cases) {
        auto f = [&](double t) {
            const double ad = c.a.alpha_dot(t);
            return ad * ad / (c.g.deriv(t) * c.a.alpha(t) * c.a.alpha_complement(t));
        };
        const double ref = oracle::integrate(f, 1e-8, 1.0 - 1e-8, 1e-10);
        const auto v = scalar_energy(c.a, c.g, kQuad);
        // the oracle truncates the (integrable) endpoint singularities, so it
        // only resolves these integrals to ~1e-5
        CHECK(std::fabs(v.value - ref) < 5e-5);
    }
}

TEST_CASE("equivalence constants") {
    const auto c1 = equivalence_constants(1, 2);
    CHECK(c1.Ck == 1.0);
    CHECK(c1.C1 == 1.0);
    CHECK(c1.C2 == 1.0);
    const auto c22 = equivalence_constants(2, 2);
    CHECK(c22.Ck == 6.0);
    CHECK(c22.Cc == 4.0);
    CHECK(c22.Cg == 2.0);
    CHECK(c22.C1 == 1.5);
    CHECK(c22.C2 == 2.0);
    const auto c32 = equivalence_constants(3, 2);
    CHECK(c32.Ck == 27.0);
    CHECK(c32.C1 == 2.25);
    CHECK(c32.C2 == 4.0);
}

TEST_CASE("enumerated energies: n=1 equals scalar") {
    const auto p1 = TargetDistribution::random_full_support(1, 3, 17);
    const auto g = InterpolationSchedule::beta(0.6, 0.6);
    const auto a = MaskSchedule::beta_optimal(0.8, 0.9);
    const auto s = scalar_energy(a, g, kQuad);
    CHECK(kinetic_energy(p1, a, g, kQuad).value == doctest::Approx(s.value).epsilon(1e-9));
    CHECK(conditional_kinetic_energy(p1, a, g, kQuad).value ==
          doctest::Approx(s.value).epsilon(1e-9));
    CHECK(geodesic_energy(p1, a, g, kQuad).value == doctest::Approx(s.value).epsilon(1e-9));
}

TEST_CASE("enumerated energies: optimal pair constants") {
    const auto p1 = TargetDistribution::random_full_support(2, 2, 23);
    const auto g = InterpolationSchedule::identity();
    const auto a = optimal_alpha(g);
    CHECK(std::fabs(kinetic_energy(p1, a, g, kQuad).value - 6.0 * kPi2) < 6e-6);
    CHECK(std::fabs(conditional_kinetic_energy(p1, a, g, kQuad).value - 4.0 * kPi2) < 4e-6);
    CHECK(std::fabs(geodesic_energy(p1, a, g, kQuad).value - 2.0 * kPi2) < 2e-6);
}

TEST_CASE("tri-equivalence and p1-independence") {
    const auto g = InterpolationSchedule::beta(0.5, 0.5);
    const auto a = MaskSchedule::beta_optimal(0.9, 0.6);
    const auto consts = equivalence_constants(3, 2);
    const auto pa = TargetDistribution::random_full_support(3, 2, 31);
    const auto pb = TargetDistribution::random_full_support(3, 2, 32);
    const auto ra = energy_report(pa, a, g, kQuad);
    CHECK(std::fabs(ra.Ek.value - consts.C1 * ra.Ec.value) / ra.Ek.value < 1e-6);
    CHECK(std::fabs(ra.Ec.value - consts.C2 * ra.Eg.value) / ra.Ec.value < 1e-6);
    const auto rb = energy_report(pb, a, g, kQuad);
    CHECK(std::fabs(ra.Ek.value - rb.Ek.value) / ra.Ek.value < 1e-8);
    CHECK(std::fabs(ra.Ec.value - rb.Ec.value) / ra.Ec.value < 1e-8);
    CHECK(std::fabs(ra.Eg.value - rb.Eg.value) / ra.Eg.value < 1e-8);
    // divergent scalar factor flags every energy
    CHECK(kinetic_energy(pa, MaskSchedule::linear(), InterpolationSchedule::beta(2, 2), kQuad)
              .diverged);
}

TEST_CASE("geodesic curve") {
    const EmbeddingPoint y0{{0.0, 0.0, 1.0}};
    const EmbeddingPoint y1{{std::sqrt(0.7), std::sqrt(0.3), 0.0}};
    const auto id = InterpolationSchedule::identity();
    CHECK(geodesic_curve(id, 0.0, y0, y1).y[2] == doctest::Approx(1.0));
    CHECK(geodesic_curve(id, 1.0, y0, y1).y[0] == doctest::Approx(std::sqrt(0.7)));
    const auto mid = geodesic_curve(id, 0.5, y0, y1);
    CHECK(mid.y[2] == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
    // squared components follow the optimal interpolation probabilities
    const auto g = InterpolationSchedule::beta(0.5, 0.5);
    const auto astar = optimal_alpha(g);
    for (double t : {0.2, 0.5, 0.77}) {
        const auto y = geodesic_curve(g, t, y0, y1);
        const double a = astar.alpha(t);
        CHECK(y.y[2] * y.y[2] == doctest::Approx(1.0 - a).epsilon(1e-12));
        CHECK(y.y[0] * y.y[0] == doctest::Approx(0.7 * a).epsilon(1e-12));
        double norm = 0.0;
        for (double c : y.y) norm += c * c;
        CHECK(norm == doctest::Approx(1.0).epsilon(1e-12));
    }
    CHECK_THROWS_AS(geodesic_curve(id, 0.5, y0, EmbeddingPoint{{0.0, 0.5, 0.5}}),
                    parameter_error);
    CHECK_THROWS_AS(geodesic_curve(id, 0.5, y1, EmbeddingPoint{{1.0, 0.0, 0.0}}),
                    parameter_error);
}

namespace {

// N+1 great-circle points at angles (pi/2) * theta_k between orthogonal y0,y1.
std::vector<EmbeddingPoint> circle_points(const std::vector<double>& theta) {
    std::vector<EmbeddingPoint> pts;
    for (double th : theta) {
        pts.push_back({{std::cos(M_PI_2 * th), std::sin(M_PI_2 * th)}});
    }
    return pts;
}

} // namespace

TEST_CASE("discrete geodesic energy") {
    CHECK(discrete_geodesic_energy(circle_points({0.0, 1.0}), {0.0, 1.0}) ==
          doctest::Approx(2.0).epsilon(1e-12));
    const double expect2 = 8.0 * (1.0 - std::sqrt(0.5));
    CHECK(discrete_geodesic_energy(circle_points({0.0, 0.5, 1.0}), {0.0, 0.5, 1.0}) ==
          doctest::Approx(expect2).epsilon(1e-12));
    CHECK_THROWS_AS(discrete_geodesic_energy(circle_points({0.0, 0.6, 1.0}), {0.0, 0.6, 0.4}),
                    parameter_error);
    // uniform placement is a local minimum under random perturbations
    SplitMix rng(2024);
    for (int N : {2, 4}) {
        std::vector<double> theta, gv;
        for (int k = 0; k <= N; ++k) {
            theta.push_back(static_cast<double>(k) / N);
            gv.push_back(static_cast<double>(k) / N);
        }
        const double best = discrete_geodesic_energy(circle_points(theta), gv);
        for (int trial = 0; trial < 100; ++trial) {
            auto pert = theta;
            for (int k = 1; k < N; ++k) {
                pert[k] += 0.1 * (2.0 * rng.next_double() - 1.0) / N;
            }
            bool valid = true;
            for (int k = 0; k < N; ++k) valid = valid && pert[k + 1] > pert[k];
            if (!valid) continue;
            CHECK(discrete_geodesic_energy(circle_points(pert), gv) >= best);
        }
    }
}

TEST_CASE("optimal conditional rate") {
    const auto id = InterpolationSchedule::identity();
    CHECK(optimal_conditional_rate(id, 0.5) == doctest::Approx(M_PI).epsilon(1e-12));
    const auto g = InterpolationSchedule::beta(0.5, 0.5);
    CHECK(optimal_conditional_rate(g, 0.5) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(optimal_conditional_rate(id, 1e-6) < 1e-4);
    CHECK_THROWS_AS(optimal_conditional_rate(id, 1.0), divergence_error);
    // rate equals alpha_dot / (1 - alpha) for the coupled schedule
    for (const auto& gamma : {id, g, InterpolationSchedule::beta(1.3, 0.8)}) {
        const auto astar = optimal_alpha(gamma);
        for (int k = 1; k <= 101; ++k) {
            const double t = static_cast<double>(k) / 102.0;
            const double lhs = optimal_conditional_rate(gamma, t);
            const double rhs = astar.alpha_dot(t) / astar.alpha_complement(t);
            CHECK(std::fabs(lhs - rhs) < 1e-10 * std::max(1.0, std::fabs(rhs)));
        }
    }
}

TEST_CASE("nelbo values and schedule invariance") {
    TargetDistribution u1(1, 2, {0.5, 0.5});
    CHECK(std::fabs(nelbo(u1, MaskSchedule::linear(), kQuad) - std::log(2.0)) < 1e-8);
    CHECK(std::fabs(nelbo(u1, MaskSchedule::squared_sine(), kQuad) - std::log(2.0)) < 1e-8);

    const auto p2 = TargetDistribution::random_full_support(2, 3, 77);
    const MaskSchedule schedules[] = {MaskSchedule::linear(), MaskSchedule::sine(),
                                      MaskSchedule::squared_sine(),
                                      MaskSchedule::beta_optimal(0.9, 0.3)};
    std::vector<double> vals;
    for (const auto& s : schedules) vals.push_back(nelbo(p2, s, kQuad));
    for (double v : vals) {
        CHECK(std::fabs(v - vals[0]) < 1e-8);
    }
    TargetDistribution point(2, 2, {1.0, 0.0, 0.0, 0.0});
    CHECK(nelbo(point, MaskSchedule::linear(), kQuad) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("energy landscape") {
    LandscapeGrid grid{0.5, 1.0, 0.25, 0.5, 1.0, 0.25};
    const auto cells = energy_landscape(InterpolationSchedule::identity(), grid, kQuad);
    REQUIRE(cells.size() == 9);
    double best = 1e300;
    double best_a = 0, best_b = 0;
    for (const auto& c : cells) {
        // a=0.5 makes alpha ~ t^1 near 0, matching gamma: divergent cell
        if (c.a == 0.5 || c.b == 0.5) CHECK(c.energy.diverged);
        if (!c.energy.diverged) {
            CHECK(c.energy.value > kPi2 - 1e-6);
            if (c.energy.value < best) {
                best = c.energy.value;
                best_a = c.a;
                best_b = c.b;
            }
        }
    }
    CHECK(best_a == 1.0);
    CHECK(best_b == 1.0);
    CHECK(std::fabs(best - kPi2) < 1e-6);
    // jobs must not change any value
    const auto cells4 = energy_landscape(InterpolationSchedule::identity(), grid, kQuad, 4);
    for (std::size_t i = 0; i < cells.size(); ++i) {
        CHECK(cells[i].energy.value == cells4[i].energy.value);
        CHECK(cells[i].energy.diverged == cells4[i].energy.diverged);
    }
    CHECK_THROWS_AS(
        energy_landscape(InterpolationSchedule::identity(),
                         LandscapeGrid{0.0, 1.0, 0.1, 0.1, 1.0, 0.1}, kQuad),
        parameter_error);
}
