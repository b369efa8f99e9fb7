#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mdm/dpf.hpp"

namespace mdm {

struct SamplerConfig {
    int steps = 3;
    MaskSchedule alpha = MaskSchedule::linear();
    std::size_t chains = 1;
    std::uint64_t seed = 0;
};

// Appendix-style analytic targets on n=5, d=2 (token 0 = 'a', 1 = 'b'):
// "extremes" = uniform {aaaaa, bbbbb}; "middle-count" = uniform over the 20
// sequences with exactly 2 or 3 'a' tokens.
TargetDistribution toy_target(const std::string& name, int n = 5, int d = 2);

// Reporting order for the 2^n mask-free sequences over d=2: ascending count
// of token 0, lexicographic within equal counts. Returns clean indices.
std::vector<std::size_t> axis_order_by_count(int n);

// Posterior tables over every partially-masked context, plus per-position
// marginals used as a fallback when a sampled context has zero probability
// under p1 (possible because simultaneous unmasking factorizes).
class ExactDenoiser {
public:
    explicit ExactDenoiser(const TargetDistribution& p1);

    const TargetDistribution& target() const { return *p1_; }
    bool supported(std::size_t state_idx) const { return supported_[state_idx]; }
    // d-vector for masked position i of the context with this state index;
    // falls back to the unconditional position marginal when unsupported,
    // reporting it through `used_fallback`.
    const std::vector<double>& posterior(std::size_t state_idx, int i,
                                         bool& used_fallback) const;

private:
    const TargetDistribution* p1_;
    int n_;
    std::vector<bool> supported_;
    std::vector<std::vector<double>> post_;     // [state*n + i], empty when n/a
    std::vector<std::vector<double>> marginal_; // [i]
};

// One ancestral-unmasking chain on the uniform grid t_k = k/steps; every
// still-masked position unmasks with probability (a(t+)-a(t))/(1-a(t)) and
// newly unmasked tokens are drawn independently given the pre-step context.
State sample_chain(const ExactDenoiser& denoiser, const SamplerConfig& config,
                   std::uint64_t chain_index, std::uint64_t cell_index = 0,
                   std::uint64_t* fallbacks = nullptr);

struct ExperimentResult {
    std::vector<std::uint64_t> counts; // size d^n
    std::vector<double> empirical;
    double tv = 0.0;
    std::uint64_t fallbacks = 0;
};

ExperimentResult run_experiment(const TargetDistribution& p1, const SamplerConfig& config,
                                std::uint64_t cell_index = 0, int jobs = 1);

double tv_distance(const std::vector<double>& p, const std::vector<double>& q);

struct TuneCell {
    double a = 0.0, b = 0.0;
    double mean_tv = 0.0, std_tv = 0.0;
    int stage = 1;
};

struct TuneResult {
    std::vector<TuneCell> cells; // ascending mean TV; refined rows stage=2
    int replicas = 1;
};

struct TuneGrid {
    double amin = 0.1, amax = 1.0, astep = 0.1;
    double bmin = 0.1, bmax = 1.0, bstep = 0.1;
};

// Two-stage tuner: every (a,b) cell scored with `replicas` seed replicas of
// run_experiment on beta-optimal(a,b); the top_k cells are re-scored with
// 4x chains. Deterministic given the master seed, independent of jobs.
TuneResult grid_search(const TargetDistribution& p1, int steps, std::size_t chains,
                       const TuneGrid& grid, int replicas, std::uint64_t master_seed,
                       int top_k = 5, int jobs = 1);

} // namespace mdm
