#include "mdm/special.hpp"

#include <cmath>
#include <limits>

namespace mdm {

namespace {

constexpr double kCfTol = 1e-14;
constexpr int kCfMaxIter = 300;

void check_params(double a, double b) {
    if (!std::isfinite(a) || !std::isfinite(b) || a <= 0.0 || b <= 0.0 || a > 100.0 || b > 100.0) {
        throw parameter_error("beta parameters must be finite and in (0,100]");
    }
}

// Modified Lentz evaluation of the continued fraction for I_x(a,b)
// (Numerical Recipes form). Valid for x < (a+1)/(a+b+2).
double betacf(double a, double b, double x) {
    const double tiny = 1e-300;
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kCfMaxIter; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kCfTol) break;
    }
    return h;
}

} // namespace

double log_beta(double a, double b) {
    check_params(a, b);
    return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

double beta_cdf(double t, double a, double b) {
    check_params(a, b);
    if (!std::isfinite(t) || t < 0.0 || t > 1.0) {
        throw parameter_error("beta_cdf argument must be in [0,1]");
    }
    if (t == 0.0) return 0.0;
    if (t == 1.0) return 1.0;
    const double lnbt = a * std::log(t) + b * std::log1p(-t) - log_beta(a, b);
    const double bt = std::exp(lnbt);
    if (t < (a + 1.0) / (a + b + 2.0)) {
        return bt * betacf(a, b, t) / a;
    }
    return 1.0 - bt * betacf(b, a, 1.0 - t) / b;
}

double beta_pdf(double t, double a, double b) {
    check_params(a, b);
    if (!std::isfinite(t) || t < 0.0 || t > 1.0) {
        throw parameter_error("beta_pdf argument must be in [0,1]");
    }
    if ((t == 0.0 && a < 1.0) || (t == 1.0 && b < 1.0)) {
        throw divergence_error("beta density diverges at this endpoint");
    }
    if (t == 0.0) return a == 1.0 ? std::exp(-log_beta(a, b)) : 0.0;
    if (t == 1.0) return b == 1.0 ? std::exp(-log_beta(a, b)) : 0.0;
    return std::exp((a - 1.0) * std::log(t) + (b - 1.0) * std::log1p(-t) - log_beta(a, b));
}

} // namespace mdm
