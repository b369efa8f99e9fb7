#pragma once

#include <functional>
#include <utility>
#include <vector>

namespace mdm {

// Composite Gauss-Legendre settings shared by the energy integrals.
// `eps` is the margin kept away from both endpoints of [0,1]; integrands
// here can be singular (but integrable) at 0 and 1, so panels are graded
// geometrically toward the ends and analytic tail estimates cover [0,eps]
// and [1-eps,1] where the endpoint behavior is known.
struct QuadratureSpec {
    int panels = 64;          // uniform middle-panel budget across [eps, 1-eps]
    int nodes = 8;            // Gauss-Legendre nodes per panel
    double eps = 1e-6;        // endpoint margin, must lie in [1e-8, 1e-3]
    bool richardson = true;   // panel-doubling consistency check

    void validate() const;
};

// Gauss-Legendre nodes/weights on [-1,1]; cached per order.
const std::vector<std::pair<double, double>>& gauss_legendre(int n);

// Panel edges on [lo,hi]: geometric blocks starting with width w_left
// (resp. w_right) at the ends, doubling inward, with `middle_panels`
// uniform panels over the central half. Power-law integrands are then
// resolved to near machine precision per panel.
std::vector<double> graded_edges(double lo, double hi, int middle_panels,
                                 double w_left, double w_right);

// Integrate f over [lo,hi] with graded panels of `nodes` points each.
// End panel widths default to scale with the interval ends' distance to
// the unit-interval endpoints (callers integrating on [eps,1-eps] get
// one-octave panels next to the margins).
double integrate_graded(const std::function<double(double)>& f,
                        double lo, double hi, int middle_panels, int nodes,
                        double w_left, double w_right);

} // namespace mdm
