#include "mdm/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace mdm {

void QuadratureSpec::validate() const {
    if (panels < 4 || nodes < 2) {
        throw std::invalid_argument("quadrature spec: need >=4 panels and >=2 nodes");
    }
    if (!(eps >= 1e-8 && eps <= 1e-3)) {
        throw std::invalid_argument("quadrature spec: eps must be in [1e-8, 1e-3]");
    }
}

const std::vector<std::pair<double, double>>& gauss_legendre(int n) {
    static std::map<int, std::vector<std::pair<double, double>>> cache;
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;

    std::vector<std::pair<double, double>> nw(n);
    // Newton iteration on Legendre polynomials, symmetric roots.
    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
            }
            pp = n * (x * p0 - p1) / (x * x - 1.0);
            const double dx = p0 / pp;
            x -= dx;
            if (std::fabs(dx) < 1e-15) break;
        }
        const double w = 2.0 / ((1.0 - x * x) * pp * pp);
        nw[i] = {-x, w};
        nw[n - 1 - i] = {x, w};
    }
    return cache.emplace(n, std::move(nw)).first->second;
}

std::vector<double> graded_edges(double lo, double hi, int middle_panels,
                                 double w_left, double w_right) {
    if (!(lo < hi)) throw std::invalid_argument("graded_edges: empty interval");
    const double len = hi - lo;
    const double mid_lo = lo + 0.25 * len;
    const double mid_hi = hi - 0.25 * len;
    middle_panels = std::max(1, middle_panels);
    w_left = std::clamp(w_left, len * 1e-12, 0.25 * len);
    w_right = std::clamp(w_right, len * 1e-12, 0.25 * len);

    std::vector<double> edges;
    edges.push_back(lo);
    // Left geometric block: widths w, 2w, 4w, ... until the middle starts.
    double pos = lo;
    for (double w = w_left; pos + w < mid_lo; w *= 2.0) {
        pos += w;
        edges.push_back(pos);
    }
    // Uniform middle.
    for (int k = 0; k <= middle_panels; ++k) {
        edges.push_back(mid_lo + (mid_hi - mid_lo) * k / middle_panels);
    }
    // Right geometric block, mirrored.
    std::vector<double> right;
    pos = hi;
    for (double w = w_right; pos - w > mid_hi; w *= 2.0) {
        pos -= w;
        right.push_back(pos);
    }
    edges.insert(edges.end(), right.rbegin(), right.rend());
    edges.push_back(hi);
    return edges;
}

double integrate_graded(const std::function<double(double)>& f,
                        double lo, double hi, int middle_panels, int nodes,
                        double w_left, double w_right) {
    const auto edges = graded_edges(lo, hi, middle_panels, w_left, w_right);
    const auto& nw = gauss_legendre(nodes);
    double total = 0.0;
    for (std::size_t p = 0; p + 1 < edges.size(); ++p) {
        const double c = 0.5 * (edges[p] + edges[p + 1]);
        const double h = 0.5 * (edges[p + 1] - edges[p]);
        double acc = 0.0;
        for (const auto& [x, w] : nw) acc += w * f(c + h * x);
        total += h * acc;
    }
    return total;
}

} // namespace mdm
