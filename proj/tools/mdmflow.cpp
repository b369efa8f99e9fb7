#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mdm/csv.hpp"
#include "mdm/energies.hpp"
#include "mdm/experiments.hpp"
#include "mdm/rng.hpp"

namespace {

std::uint64_t default_seed() {
    const char* env = std::getenv("MDM_LAB_SEED");
    return env ? std::strtoull(env, nullptr, 10) : 0;
}

mdm::TargetDistribution resolve_target(const std::string& spec, int n, int d) {
    if (spec.rfind("csv:", 0) == 0) {
        return mdm::TargetDistribution::from_csv(spec.substr(4), n, d);
    }
    return mdm::toy_target(spec, n, d);
}

std::string seq_string(const mdm::State& s) {
    std::string out;
    for (int v : s) out.push_back(static_cast<char>('a' + v));
    return out;
}

struct GridRange {
    double lo = 0.1, hi = 1.0, step = 0.1;
};

GridRange parse_grid(const std::string& text) {
    GridRange g;
    if (std::sscanf(text.c_str(), "%lf:%lf:%lf", &g.lo, &g.hi, &g.step) != 3) {
        throw CLI::ValidationError("--grid", "expected lo:hi:step");
    }
    return g;
}

int run_schedule_eval(const std::string& kind, double a, double b, int points,
                      const std::string& out) {
    const auto alpha = mdm::MaskSchedule::from_name(kind, a, b);
    const auto gamma = mdm::gamma_from_alpha(alpha);
    std::vector<std::string> rows;
    for (int i = 0; i < points; ++i) {
        const double t = static_cast<double>(i) / (points - 1);
        std::string row = mdm::format_double(t);
        row += "," + mdm::format_double(alpha.alpha(t));
        row += "," + mdm::format_double(alpha.alpha_dot(t));
        row += "," + mdm::format_double(gamma.value(t));
        row += "," + mdm::format_double(gamma.deriv(t));
        row += ",";
        if (t > 0.0) row += mdm::format_double(alpha.sigma(t));
        rows.push_back(row);
    }
    mdm::emit_csv(out, "t,alpha,alpha_dot,gamma,gamma_dot,sigma", rows, "schedule eval",
                  {{"kind", kind},
                   {"a", mdm::format_double(a)},
                   {"b", mdm::format_double(b)},
                   {"points", std::to_string(points)},
                   {"out", out}},
                  0);
    return 0;
}

mdm::InterpolationSchedule make_gamma(const std::string& kind, double a, double b) {
    if (kind == "identity") return mdm::InterpolationSchedule::identity();
    if (kind == "beta") return mdm::InterpolationSchedule::beta(a, b);
    throw CLI::ValidationError("--gamma-kind", "expected identity or beta");
}

int run_energy_scalar(const std::string& akind, double aa, double ab,
                      const std::string& gkind, double ga, double gb) {
    const auto gamma = make_gamma(gkind, ga, gb);
    const auto alpha = akind == "optimal" ? mdm::optimal_alpha(gamma)
                                          : mdm::MaskSchedule::from_name(akind, aa, ab);
    const auto v = mdm::scalar_energy(alpha, gamma, mdm::QuadratureSpec{});
    std::cout << "alpha=" << alpha.describe() << " gamma=" << gamma.describe() << "\n";
    if (v.diverged) {
        std::cout << "energy=inf diverged=1\n";
    } else {
        std::cout << "energy=" << mdm::format_double(v.value) << " diverged=0 trusted="
                  << (v.trusted ? 1 : 0)
                  << " richardson_delta=" << mdm::format_double(v.richardson_delta) << "\n";
    }
    return 0;
}

int run_energy_landscape(const std::string& gkind, double ga, double gb,
                         const mdm::LandscapeGrid& grid, const std::string& out,
                         int jobs) {
    const auto gamma = make_gamma(gkind, ga, gb);
    const auto cells = mdm::energy_landscape(gamma, grid, mdm::QuadratureSpec{}, jobs);
    std::vector<std::string> rows;
    for (const auto& c : cells) {
        std::string row = mdm::format_double(c.a) + "," + mdm::format_double(c.b) + ",";
        row += c.energy.diverged ? "inf" : mdm::format_double(c.energy.value);
        row += c.energy.diverged ? ",1" : ",0";
        rows.push_back(row);
    }
    mdm::emit_csv(out, "a,b,energy,diverged", rows, "energy landscape",
                  {{"gamma-kind", gkind},
                   {"gamma-a", mdm::format_double(ga)},
                   {"gamma-b", mdm::format_double(gb)},
                   {"amin", mdm::format_double(grid.amin)},
                   {"amax", mdm::format_double(grid.amax)},
                   {"astep", mdm::format_double(grid.astep)},
                   {"bmin", mdm::format_double(grid.bmin)},
                   {"bmax", mdm::format_double(grid.bmax)},
                   {"bstep", mdm::format_double(grid.bstep)},
                   {"out", out}},
                  0);
    return 0;
}

int run_verify_equivalence(int n, int d, int trials, std::uint64_t seed) {
    const mdm::QuadratureSpec q{};
    const auto consts = mdm::equivalence_constants(n, d);
    struct Pair {
        mdm::MaskSchedule alpha;
        mdm::InterpolationSchedule gamma;
    };
    std::vector<Pair> pairs;
    const auto g_half = mdm::InterpolationSchedule::beta(0.5, 0.5);
    const auto g_22 = mdm::InterpolationSchedule::beta(2.0, 2.0);
    const auto g_id = mdm::InterpolationSchedule::identity();
    pairs.push_back({mdm::optimal_alpha(g_id), g_id});
    pairs.push_back({mdm::optimal_alpha(g_half), g_half});
    pairs.push_back({mdm::optimal_alpha(g_22), g_22});
    pairs.push_back({mdm::MaskSchedule::squared_sine(), g_half});
    pairs.push_back({mdm::MaskSchedule::beta_optimal(0.9, 0.6), g_22});

    double worst_k = 0.0, worst_g = 0.0;
    for (int trial = 0; trial < trials; ++trial) {
        const auto p1 = mdm::TargetDistribution::random_full_support(
            n, d, mdm::derive_seed(seed, 0, trial));
        for (std::size_t s = 0; s < pairs.size(); ++s) {
            const auto r = mdm::energy_report(p1, pairs[s].alpha, pairs[s].gamma, q);
            if (r.Ek.diverged) continue;
            const double dk = std::fabs(r.Ek.value - consts.C1 * r.Ec.value) / r.Ek.value;
            const double dg = std::fabs(r.Ec.value - consts.C2 * r.Eg.value) / r.Ec.value;
            worst_k = std::max(worst_k, dk);
            worst_g = std::max(worst_g, dg);
        }
    }
    const bool ok = worst_k < 1e-6 && worst_g < 1e-6;
    std::cout << "check,max_rel_dev,tolerance,status\n";
    std::cout << "Ek_vs_C1_Ec," << mdm::format_double(worst_k) << ",1e-06,"
              << (worst_k < 1e-6 ? "pass" : "FAIL") << "\n";
    std::cout << "Ec_vs_C2_Eg," << mdm::format_double(worst_g) << ",1e-06,"
              << (worst_g < 1e-6 ? "pass" : "FAIL") << "\n";
    std::cout << "constants,Ck=" << consts.Ck << ";Cc=" << consts.Cc << ";Cg=" << consts.Cg
              << ";C1=" << consts.C1 << ";C2=" << consts.C2 << ",,info\n";
    return ok ? 0 : 1;
}

int run_sample(const std::string& target, int n, int d, int steps, double a, double b,
               std::size_t chains, std::uint64_t seed, const std::string& out, int jobs) {
    const auto p1 = resolve_target(target, n, d);
    mdm::SamplerConfig cfg;
    cfg.steps = steps;
    cfg.chains = chains;
    cfg.seed = seed;
    cfg.alpha = mdm::MaskSchedule::beta_optimal(a, b);
    const auto result = mdm::run_experiment(p1, cfg, 0, jobs);

    std::vector<std::size_t> order;
    if (d == 2) {
        order = mdm::axis_order_by_count(n);
    } else {
        order.resize(p1.space().clean_size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    }
    std::vector<std::string> rows;
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
        const std::size_t idx = order[rank];
        std::string row = std::to_string(rank);
        row += "," + seq_string(p1.space().clean_state(idx));
        row += "," + mdm::format_double(p1.prob(idx));
        row += "," + mdm::format_double(result.empirical[idx]);
        rows.push_back(row);
    }
    mdm::emit_csv(out, "sequence_index,sequence,target_prob,empirical_prob", rows,
                  "sample run",
                  {{"target", target},
                   {"n", std::to_string(n)},
                   {"d", std::to_string(d)},
                   {"steps", std::to_string(steps)},
                   {"a", mdm::format_double(a)},
                   {"b", mdm::format_double(b)},
                   {"chains", std::to_string(chains)},
                   {"out", out}},
                  seed);
    std::cout << "tv=" << mdm::format_double(result.tv) << "\n";
    if (result.fallbacks > 0) {
        std::cerr << "note: " << result.fallbacks
                  << " token draws fell back to position marginals "
                     "(zero-probability contexts from factorized unmasking)\n";
    }
    return 0;
}

int run_tune(const std::string& target, int n, int d, int steps, const std::string& grid_text,
             int replicas, std::size_t chains, std::uint64_t seed, const std::string& out,
             int jobs) {
    const auto p1 = resolve_target(target, n, d);
    const GridRange g = parse_grid(grid_text);
    mdm::TuneGrid grid{g.lo, g.hi, g.step, g.lo, g.hi, g.step};
    const auto result = mdm::grid_search(p1, steps, chains, grid, replicas, seed, 5, jobs);
    std::vector<std::string> rows;
    for (const auto& c : result.cells) {
        rows.push_back(mdm::format_double(c.a) + "," + mdm::format_double(c.b) + "," +
                       mdm::format_double(c.mean_tv) + "," + mdm::format_double(c.std_tv) +
                       "," + std::to_string(c.stage));
    }
    mdm::emit_csv(out, "a,b,mean_tv,std_tv,stage", rows, "tune grid",
                  {{"target", target},
                   {"n", std::to_string(n)},
                   {"d", std::to_string(d)},
                   {"steps", std::to_string(steps)},
                   {"grid", grid_text},
                   {"replicas", std::to_string(replicas)},
                   {"chains", std::to_string(chains)},
                   {"out", out}},
                  seed);
    return 0;
}

// Merge a plain key=value config file under explicit flags: values from the
// file are appended as --key=value unless the flag already appears on the
// command line; unknown keys then fail normal flag parsing.
std::vector<std::string> merge_config(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    std::string config_path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config") {
            if (i + 1 >= args.size()) throw CLI::ValidationError("--config", "missing path");
            config_path = args[i + 1];
            args.erase(args.begin() + i, args.begin() + i + 2);
            break;
        }
        if (args[i].rfind("--config=", 0) == 0) {
            config_path = args[i].substr(9);
            args.erase(args.begin() + i);
            break;
        }
    }
    if (config_path.empty()) return args;
    std::ifstream in(config_path);
    if (!in) throw CLI::ValidationError("--config", "cannot read " + config_path);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw CLI::ValidationError("--config", "expected key=value, got: " + line);
        }
        const std::string key = "--" + line.substr(0, eq);
        bool present = false;
        for (const auto& arg : args) {
            if (arg == key || arg.rfind(key + "=", 0) == 0) {
                present = true;
                break;
            }
        }
        if (!present) args.push_back(key + "=" + line.substr(eq + 1));
    }
    return args;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Masked-diffusion schedule and energy toolkit"};
    app.require_subcommand(1);

    std::string kind = "linear", akind = "linear", gkind = "identity";
    std::string target = "extremes", out = "out.csv", grid_text = "0.1:1.0:0.1";
    double a = 1.0, b = 1.0, aa = 1.0, ab = 1.0, ga = 1.0, gb = 1.0;
    int points = 101, n = 5, d = 2, steps = 3, trials = 10, replicas = 3, jobs = 1;
    std::size_t chains = 20000;
    std::uint64_t seed = default_seed();
    mdm::LandscapeGrid lgrid;

    auto* schedule = app.add_subcommand("schedule", "Schedule tables");
    auto* sched_eval = schedule->add_subcommand("eval", "Tabulate a mask schedule");
    sched_eval->add_option("--kind", kind)->required();
    sched_eval->add_option("--a", a);
    sched_eval->add_option("--b", b);
    sched_eval->add_option("--points", points)->check(CLI::PositiveNumber);
    sched_eval->add_option("--out", out)->required();

    auto* energy = app.add_subcommand("energy", "Energy functionals");
    auto* escalar = energy->add_subcommand("scalar", "Scalar energy of a schedule pair");
    escalar->add_option("--alpha", akind)->required();
    escalar->add_option("--alpha-a", aa);
    escalar->add_option("--alpha-b", ab);
    escalar->add_option("--gamma-kind", gkind);
    escalar->add_option("--gamma-a", ga);
    escalar->add_option("--gamma-b", gb);
    auto* eland = energy->add_subcommand("landscape", "Beta-grid energy landscape");
    eland->add_option("--gamma-kind", gkind)->required();
    eland->add_option("--gamma-a", ga);
    eland->add_option("--gamma-b", gb);
    eland->add_option("--amin", lgrid.amin);
    eland->add_option("--amax", lgrid.amax);
    eland->add_option("--astep", lgrid.astep);
    eland->add_option("--bmin", lgrid.bmin);
    eland->add_option("--bmax", lgrid.bmax);
    eland->add_option("--bstep", lgrid.bstep);
    eland->add_option("--out", out)->required();
    eland->add_option("--jobs", jobs)->check(CLI::PositiveNumber);

    auto* verify = app.add_subcommand("verify", "Invariant suites");
    auto* vequiv = verify->add_subcommand("equivalence", "Energy tri-equivalence");
    vequiv->add_option("--n", n)->required();
    vequiv->add_option("--d", d)->required();
    vequiv->add_option("--trials", trials);
    vequiv->add_option("--seed", seed);

    auto* sample = app.add_subcommand("sample", "Ancestral sampling");
    auto* srun = sample->add_subcommand("run", "Run chains against a target");
    srun->add_option("--target", target)->required();
    srun->add_option("--n", n);
    srun->add_option("--d", d);
    srun->add_option("--steps", steps)->check(CLI::PositiveNumber);
    srun->add_option("--a", a);
    srun->add_option("--b", b);
    srun->add_option("--chains", chains)->check(CLI::PositiveNumber);
    srun->add_option("--seed", seed);
    srun->add_option("--out", out)->required();
    srun->add_option("--jobs", jobs)->check(CLI::PositiveNumber);

    auto* tune = app.add_subcommand("tune", "Schedule tuning");
    auto* tgrid = tune->add_subcommand("grid", "Two-stage Beta grid search");
    tgrid->add_option("--target", target)->required();
    tgrid->add_option("--n", n);
    tgrid->add_option("--d", d);
    tgrid->add_option("--steps", steps)->check(CLI::PositiveNumber);
    tgrid->add_option("--grid", grid_text);
    tgrid->add_option("--replicas", replicas)->check(CLI::PositiveNumber);
    tgrid->add_option("--chains", chains)->check(CLI::PositiveNumber);
    tgrid->add_option("--seed", seed);
    tgrid->add_option("--out", out)->required();
    tgrid->add_option("--jobs", jobs)->check(CLI::PositiveNumber);

    try {
        const auto args = merge_config(argc, argv);
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (sched_eval->parsed()) return run_schedule_eval(kind, a, b, points, out);
        if (escalar->parsed()) return run_energy_scalar(akind, aa, ab, gkind, ga, gb);
        if (eland->parsed()) return run_energy_landscape(gkind, ga, gb, lgrid, out, jobs);
        if (vequiv->parsed()) return run_verify_equivalence(n, d, trials, seed);
        if (srun->parsed()) return run_sample(target, n, d, steps, a, b, chains, seed, out, jobs);
        if (tgrid->parsed()) return run_tune(target, n, d, steps, grid_text, replicas,
                                             chains, seed, out, jobs);
    } catch (const mdm::parameter_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const mdm::divergence_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    std::cerr << "no subcommand selected\n";
    return 2;
}
