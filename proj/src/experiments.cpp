#include "mdm/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "mdm/rng.hpp"

namespace mdm {

TargetDistribution toy_target(const std::string& name, int n, int d) {
    if (n != 5 || d != 2) throw parameter_error("toy targets are defined for n=5, d=2");
    StateSpace space(n, d);
    std::vector<double> p(space.clean_size(), 0.0);
    if (name == "extremes") {
        p[space.clean_index(State(5, 0))] = 0.5;
        p[space.clean_index(State(5, 1))] = 0.5;
    } else if (name == "middle-count") {
        std::vector<std::size_t> hits;
        for (std::size_t i = 0; i < space.clean_size(); ++i) {
            const State s = space.clean_state(i);
            const int zeros = static_cast<int>(std::count(s.begin(), s.end(), 0));
            if (zeros == 2 || zeros == 3) hits.push_back(i);
        }
        for (std::size_t i : hits) p[i] = 1.0 / hits.size();
    } else {
        throw parameter_error("unknown toy target: " + name);
    }
    return TargetDistribution(n, d, std::move(p));
}

std::vector<std::size_t> axis_order_by_count(int n) {
    StateSpace space(n, 2);
    std::vector<std::size_t> order(space.clean_size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const State sa = space.clean_state(a), sb = space.clean_state(b);
        const long ca = std::count(sa.begin(), sa.end(), 0);
        const long cb = std::count(sb.begin(), sb.end(), 0);
        if (ca != cb) return ca < cb;
        return sa < sb; // token 0 sorts before token 1
    });
    return order;
}

ExactDenoiser::ExactDenoiser(const TargetDistribution& p1)
    : p1_(&p1), n_(p1.n()) {
    const auto& space = p1.space();
    supported_.assign(space.size(), false);
    post_.resize(space.size() * n_);
    marginal_.assign(n_, std::vector<double>(p1.d(), 0.0));
    for (std::size_t xi = 0; xi < space.clean_size(); ++xi) {
        const double w = p1.prob(xi);
        if (w <= 0.0) continue;
        const State x1 = space.clean_state(xi);
        for (int i = 0; i < n_; ++i) marginal_[i][static_cast<std::size_t>(x1[i])] += w;
    }
    const int mask = space.mask();
    for (std::size_t zi = 0; zi < space.size(); ++zi) {
        const State z = space.state(zi);
        // Context support: does any x1 with positive mass match the unmasked tokens?
        double ctx = marginal(p1, 0.5, z); // positive iff the context is supported
        supported_[zi] = ctx > 0.0;
        if (!supported_[zi]) continue;
        for (int i = 0; i < n_; ++i) {
            if (z[i] == mask) post_[zi * n_ + i] = token_posterior(p1, z, i);
        }
    }
}

const std::vector<double>& ExactDenoiser::posterior(std::size_t state_idx, int i,
                                                    bool& used_fallback) const {
    const auto& table = post_[state_idx * n_ + static_cast<std::size_t>(i)];
    if (supported_[state_idx] && !table.empty()) {
        used_fallback = false;
        return table;
    }
    used_fallback = true;
    return marginal_[static_cast<std::size_t>(i)];
}

namespace {

int draw_token(const std::vector<double>& probs, double u) {
    double acc = 0.0;
    for (std::size_t v = 0; v + 1 < probs.size(); ++v) {
        acc += probs[v];
        if (u < acc) return static_cast<int>(v);
    }
    return static_cast<int>(probs.size()) - 1;
}

} // namespace

State sample_chain(const ExactDenoiser& denoiser, const SamplerConfig& config,
                   std::uint64_t chain_index, std::uint64_t cell_index,
                   std::uint64_t* fallbacks) {
    if (config.steps < 1) throw parameter_error("sampler needs steps >= 1");
    const auto& p1 = denoiser.target();
    const auto& space = p1.space();
    const int n = space.n(), mask = space.mask();
    SplitMix rng(derive_seed(config.seed, cell_index, chain_index));

    State z(n, mask);
    for (int k = 0; k < config.steps; ++k) {
        const double t0 = static_cast<double>(k) / config.steps;
        const double t1 = static_cast<double>(k + 1) / config.steps;
        const double c0 = config.alpha.alpha_complement(t0);
        const double c1 = config.alpha.alpha_complement(t1);
        // P(unmask in this step | still masked); exactly 1 at the final step.
        const double p = 1.0 - c1 / c0;
        const std::size_t ctx = space.index(z); // pre-step context
        State next = z;
        for (int i = 0; i < n; ++i) {
            if (z[i] != mask) continue;
            if (rng.next_double() < p) {
                bool used_fallback = false;
                const auto& probs = denoiser.posterior(ctx, i, used_fallback);
                next[i] = draw_token(probs, rng.next_double());
                if (used_fallback && fallbacks) ++*fallbacks;
            }
        }
        z = std::move(next);
    }
    return z;
}

ExperimentResult run_experiment(const TargetDistribution& p1, const SamplerConfig& config,
                                std::uint64_t cell_index, int jobs) {
    if (config.chains < 1) throw parameter_error("run_experiment needs chains >= 1");
    const ExactDenoiser denoiser(p1);
    const auto& space = p1.space();

    ExperimentResult result;
    result.counts.assign(space.clean_size(), 0);

    jobs = std::max(1, jobs);
    std::vector<std::vector<std::uint64_t>> counts(
        jobs, std::vector<std::uint64_t>(space.clean_size(), 0));
    std::vector<std::uint64_t> falls(jobs, 0);
    auto work = [&](int j) {
        for (std::size_t c = j; c < config.chains; c += jobs) {
            const State out = sample_chain(denoiser, config, c, cell_index, &falls[j]);
            ++counts[static_cast<std::size_t>(j)][space.clean_index(out)];
        }
    };
    if (jobs == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        for (int j = 0; j < jobs; ++j) pool.emplace_back(work, j);
        for (auto& th : pool) th.join();
    }
    for (int j = 0; j < jobs; ++j) {
        result.fallbacks += falls[j];
        for (std::size_t i = 0; i < result.counts.size(); ++i) {
            result.counts[i] += counts[j][i];
        }
    }
    result.empirical.resize(result.counts.size());
    for (std::size_t i = 0; i < result.counts.size(); ++i) {
        result.empirical[i] = static_cast<double>(result.counts[i]) / config.chains;
    }
    result.tv = tv_distance(result.empirical, p1.table());
    return result;
}

double tv_distance(const std::vector<double>& p, const std::vector<double>& q) {
    if (p.size() != q.size()) throw parameter_error("tv_distance: support sizes differ");
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) acc += std::fabs(p[i] - q[i]);
    return 0.5 * acc;
}

namespace {

TuneCell score_cell(const TargetDistribution& p1, int steps, std::size_t chains,
                    double a, double b, int replicas, std::uint64_t master,
                    std::uint64_t cell_index, int stage, int jobs) {
    SamplerConfig cfg;
    cfg.steps = steps;
    cfg.chains = chains;
    cfg.alpha = MaskSchedule::beta_optimal(a, b);
    std::vector<double> tvs;
    for (int r = 0; r < replicas; ++r) {
        cfg.seed = mix64(master ^ static_cast<std::uint64_t>(r));
        tvs.push_back(run_experiment(p1, cfg, cell_index, jobs).tv);
    }
    TuneCell cell;
    cell.a = a;
    cell.b = b;
    cell.stage = stage;
    for (double v : tvs) cell.mean_tv += v;
    cell.mean_tv /= replicas;
    if (replicas > 1) {
        double ss = 0.0;
        for (double v : tvs) ss += (v - cell.mean_tv) * (v - cell.mean_tv);
        cell.std_tv = std::sqrt(ss / (replicas - 1));
    }
    return cell;
}

} // namespace

TuneResult grid_search(const TargetDistribution& p1, int steps, std::size_t chains,
                       const TuneGrid& grid, int replicas, std::uint64_t master_seed,
                       int top_k, int jobs) {
    if (replicas < 1) throw parameter_error("grid_search needs replicas >= 1");
    std::vector<std::pair<double, double>> cells;
    const int na = static_cast<int>(std::floor((grid.amax - grid.amin) / grid.astep + 1e-9)) + 1;
    const int nb = static_cast<int>(std::floor((grid.bmax - grid.bmin) / grid.bstep + 1e-9)) + 1;
    for (int i = 0; i < na; ++i) {
        for (int j = 0; j < nb; ++j) {
            cells.emplace_back(grid.amin + i * grid.astep, grid.bmin + j * grid.bstep);
        }
    }
    TuneResult result;
    result.replicas = replicas;
    result.cells.reserve(cells.size() + static_cast<std::size_t>(top_k));
    for (std::size_t k = 0; k < cells.size(); ++k) {
        result.cells.push_back(score_cell(p1, steps, chains, cells[k].first,
                                          cells[k].second, replicas, master_seed, k, 1,
                                          jobs));
    }
    auto rank = [](const TuneCell& x, const TuneCell& y) {
        if (x.mean_tv != y.mean_tv) return x.mean_tv < y.mean_tv;
        if (x.stage != y.stage) return x.stage > y.stage;
        if (x.a != y.a) return x.a < y.a;
        return x.b < y.b;
    };
    std::sort(result.cells.begin(), result.cells.end(), rank);

    const std::size_t refine = std::min<std::size_t>(top_k, result.cells.size());
    std::vector<TuneCell> refined;
    for (std::size_t r = 0; r < refine; ++r) {
        const auto& c = result.cells[r];
        // Stable cell index: position in the stage-1 lattice.
        std::size_t idx = 0;
        for (; idx < cells.size(); ++idx) {
            if (cells[idx].first == c.a && cells[idx].second == c.b) break;
        }
        refined.push_back(score_cell(p1, steps, 4 * chains, c.a, c.b, replicas,
                                     master_seed, cells.size() + idx, 2, jobs));
    }
    result.cells.insert(result.cells.end(), refined.begin(), refined.end());
    std::sort(result.cells.begin(), result.cells.end(), rank);
    return result;
}

} // namespace mdm
