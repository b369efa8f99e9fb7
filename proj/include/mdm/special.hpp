#pragma once

#include <stdexcept>

namespace mdm {

// Signals a genuine analytic divergence (value tends to infinity at the
// evaluation point), as opposed to a numeric overflow or a bad argument.
struct divergence_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad or out-of-range parameters.
struct parameter_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// log B(a,b) = lgamma(a) + lgamma(b) - lgamma(a+b)
double log_beta(double a, double b);

// Regularized incomplete beta I_t(a,b), the CDF of Beta(a,b).
// Continued fraction with the symmetry switch at t = (a+1)/(a+b+2).
// Requires t in [0,1] and a,b in (0,100].
double beta_cdf(double t, double a, double b);

// Beta(a,b) density t^{a-1}(1-t)^{b-1}/B(a,b).
// At t=0 with a<1 (resp. t=1 with b<1) the density diverges; throws
// divergence_error there. Endpoints with nonnegative exponent are fine.
double beta_pdf(double t, double a, double b);

} // namespace mdm
