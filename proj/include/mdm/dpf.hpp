#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "mdm/schedules.hpp"

namespace mdm {

// Requested state z has zero probability (posterior context or marginal).
class unsupported_context_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// z cannot arise from the given clean sequence x1.
class incompatible_state_error : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

using State = std::vector<int>; // entries 0..d; d is the mask symbol

// Enumeration of all (d+1)^n sequences over d clean tokens plus mask.
class StateSpace {
public:
    StateSpace(int n, int d); // throws parameter_error beyond the 1e6 cap

    int n() const { return n_; }
    int d() const { return d_; }
    int mask() const { return d_; }
    std::size_t size() const { return size_; }        // (d+1)^n
    std::size_t clean_size() const { return clean_; } // d^n

    std::size_t index(const State& z) const;          // lexicographic, base d+1
    State state(std::size_t idx) const;
    std::size_t clean_index(const State& x1) const;   // base d, mask-free only
    State clean_state(std::size_t idx) const;

    int mask_count(const State& z) const;
    bool mask_free(const State& z) const;
    // True when z agrees with x1 on every unmasked position.
    bool compatible(const State& z, const State& x1) const;

private:
    int n_, d_;
    std::size_t size_, clean_;
};

// Explicit probability table over mask-free sequences.
class TargetDistribution {
public:
    TargetDistribution(int n, int d, std::vector<double> probs);

    static TargetDistribution from_csv(const std::string& path, int n, int d);
    static TargetDistribution random_full_support(int n, int d, std::uint64_t seed);

    const StateSpace& space() const { return space_; }
    int n() const { return space_.n(); }
    int d() const { return space_.d(); }
    double prob(std::size_t clean_idx) const { return p_[clean_idx]; }
    double prob(const State& x1) const { return p_[space_.clean_index(x1)]; }
    const std::vector<double>& table() const { return p_; }

private:
    StateSpace space_;
    std::vector<double> p_;
};

struct FlowSnapshot {
    double t = 0.0;
    std::vector<double> marginals; // size (d+1)^n
};

// Per-token interpolation kernel: prod_i [a*1{z^i=x1^i} + (1-a)*1{z^i=M}].
double conditional_flow(double alpha, const State& x1, const State& z, int mask);

// p_t(z) = sum_x1 p1(x1) * conditional_flow(alpha, x1, z).
double marginal(const TargetDistribution& p1, double alpha, const State& z);

FlowSnapshot flow_snapshot(const TargetDistribution& p1, double alpha, double t);

// p1(x^i = v | unmasked tokens of z); z^i must be masked; throws
// unsupported_context_error when the context has zero probability.
std::vector<double> token_posterior(const TargetDistribution& p1, const State& z, int i);

// Likelihood ratio p_t(x)/p_t(z) for a single-token unmasking z -> x,
// computed from direct marginals and cross-checked against the factorized
// form (alpha/(1-alpha)) * p1(x^i | unmasked context).
double concrete_score(const TargetDistribution& p1, double alpha,
                      const State& z, const State& x);

// Generator with off-diagonal mass only on single-token unmaskings.
struct SparseRate {
    std::size_t n_states = 0;
    // off[z] lists (target index, rate); diag[z] = -row sum.
    std::vector<std::vector<std::pair<std::size_t, double>>> off;
    std::vector<double> diag;

    // Row-vector action (p^T Q)(x): time derivative of a distribution.
    std::vector<double> apply(const std::vector<double>& p) const;
};

SparseRate rate_matrix(const TargetDistribution& p1, const MaskSchedule& alpha, double t);

// Conditional generator entry given the clean sequence x1 (Q_{t|1}):
// sigma*alpha/(1-alpha) on compatible single-token unmaskings.
double conditional_rate(const MaskSchedule& alpha, double t,
                        const State& z, const State& x, const State& x1);

// Max-norm Kolmogorov-forward residual using a central difference of
// width h; O(h^2) when the generator and marginals are consistent.
double forward_residual(const TargetDistribution& p1, const MaskSchedule& alpha,
                        double t, double h);

} // namespace mdm
