#include "mdm/dpf.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "mdm/rng.hpp"

namespace mdm {

StateSpace::StateSpace(int n, int d) : n_(n), d_(d) {
    if (n < 1 || d < 2) throw parameter_error("state space needs n >= 1 and d >= 2");
    std::size_t sz = 1, cl = 1;
    for (int i = 0; i < n; ++i) {
        sz *= static_cast<std::size_t>(d + 1);
        cl *= static_cast<std::size_t>(d);
        if (sz > 1000000) throw parameter_error("state space exceeds the 10^6 cap");
    }
    size_ = sz;
    clean_ = cl;
}

std::size_t StateSpace::index(const State& z) const {
    std::size_t idx = 0;
    for (int v : z) idx = idx * (d_ + 1) + static_cast<std::size_t>(v);
    return idx;
}

State StateSpace::state(std::size_t idx) const {
    State z(n_);
    for (int i = n_ - 1; i >= 0; --i) {
        z[i] = static_cast<int>(idx % (d_ + 1));
        idx /= (d_ + 1);
    }
    return z;
}

std::size_t StateSpace::clean_index(const State& x1) const {
    std::size_t idx = 0;
    for (int v : x1) {
        if (v < 0 || v >= d_) throw parameter_error("clean_index on a masked state");
        idx = idx * d_ + static_cast<std::size_t>(v);
    }
    return idx;
}

State StateSpace::clean_state(std::size_t idx) const {
    State z(n_);
    for (int i = n_ - 1; i >= 0; --i) {
        z[i] = static_cast<int>(idx % d_);
        idx /= d_;
    }
    return z;
}

int StateSpace::mask_count(const State& z) const {
    int m = 0;
    for (int v : z) m += (v == d_);
    return m;
}

bool StateSpace::mask_free(const State& z) const { return mask_count(z) == 0; }

bool StateSpace::compatible(const State& z, const State& x1) const {
    for (int i = 0; i < n_; ++i) {
        if (z[i] != d_ && z[i] != x1[i]) return false;
    }
    return true;
}

TargetDistribution::TargetDistribution(int n, int d, std::vector<double> probs)
    : space_(n, d), p_(std::move(probs)) {
    if (p_.size() != space_.clean_size()) {
        throw parameter_error("target table size must be d^n");
    }
    double sum = 0.0;
    for (double v : p_) {
        if (!(v >= 0.0)) throw parameter_error("target probabilities must be nonnegative");
        sum += v;
    }
    if (std::fabs(sum - 1.0) > 1e-9) {
        throw parameter_error("target probabilities must sum to 1 within 1e-9");
    }
    for (double& v : p_) v /= sum;
}

TargetDistribution TargetDistribution::from_csv(const std::string& path, int n, int d) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open target CSV: " + path);
    std::string line;
    if (!std::getline(in, line) || line.rfind("tokens,prob", 0) != 0) {
        throw parameter_error("target CSV must start with header 'tokens,prob'");
    }
    StateSpace space(n, d);
    std::vector<double> p(space.clean_size(), 0.0);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw parameter_error("malformed target CSV row: " + line);
        const std::string tok = line.substr(0, comma);
        if (static_cast<int>(tok.size()) != n) {
            throw parameter_error("token string must have length n: " + tok);
        }
        std::size_t idx = 0;
        for (char c : tok) {
            const int v = c - '0';
            if (v < 0 || v >= d) throw parameter_error("token digit out of range: " + tok);
            idx = idx * d + static_cast<std::size_t>(v);
        }
        p[idx] += std::stod(line.substr(comma + 1));
    }
    return TargetDistribution(n, d, std::move(p));
}

TargetDistribution TargetDistribution::random_full_support(int n, int d, std::uint64_t seed) {
    StateSpace space(n, d);
    SplitMix rng(mix64(seed));
    std::vector<double> p(space.clean_size());
    double sum = 0.0;
    for (double& v : p) {
        v = 1e-3 + rng.next_double(); // floor keeps every context supported
        sum += v;
    }
    for (double& v : p) v /= sum;
    return TargetDistribution(n, d, std::move(p));
}

double conditional_flow(double alpha, const State& x1, const State& z, int mask) {
    double prod = 1.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        if (z[i] == mask) {
            prod *= 1.0 - alpha;
        } else if (z[i] == x1[i]) {
            prod *= alpha;
        } else {
            return 0.0;
        }
    }
    return prod;
}

double marginal(const TargetDistribution& p1, double alpha, const State& z) {
    const auto& space = p1.space();
    const int n = space.n(), mask = space.mask();
    const int m = space.mask_count(z);
    // prod over per-token factors = alpha^{n-m} (1-alpha)^m on compatible x1.
    const double factor = std::pow(alpha, n - m) * std::pow(1.0 - alpha, m);
    if (factor == 0.0) {
        // alpha in {0,1}: only exact matches survive.
        if (alpha == 0.0) return m == n ? 1.0 : 0.0;
        if (alpha == 1.0) return m == 0 ? p1.prob(z) : 0.0;
    }
    // Sum p1 over completions of the masked positions.
    std::vector<int> masked;
    for (int i = 0; i < n; ++i) {
        if (z[i] == mask) masked.push_back(i);
    }
    State x1 = z;
    double ctx = 0.0;
    const int d = space.d();
    std::size_t combos = 1;
    for (std::size_t k = 0; k < masked.size(); ++k) combos *= d;
    for (std::size_t c = 0; c < combos; ++c) {
        std::size_t rem = c;
        for (int pos : masked) {
            x1[pos] = static_cast<int>(rem % d);
            rem /= d;
        }
        ctx += p1.prob(x1);
    }
    return factor * ctx;
}

FlowSnapshot flow_snapshot(const TargetDistribution& p1, double alpha, double t) {
    const auto& space = p1.space();
    FlowSnapshot snap;
    snap.t = t;
    snap.marginals.resize(space.size());
    for (std::size_t i = 0; i < space.size(); ++i) {
        snap.marginals[i] = marginal(p1, alpha, space.state(i));
    }
    return snap;
}

std::vector<double> token_posterior(const TargetDistribution& p1, const State& z, int i) {
    const auto& space = p1.space();
    const int n = space.n(), d = space.d(), mask = space.mask();
    if (i < 0 || i >= n || z[i] != mask) {
        throw parameter_error("token_posterior requires a masked position");
    }
    std::vector<int> masked;
    for (int j = 0; j < n; ++j) {
        if (j != i && z[j] == mask) masked.push_back(j);
    }
    State x1 = z;
    std::vector<double> w(d, 0.0);
    std::size_t combos = 1;
    for (std::size_t k = 0; k < masked.size(); ++k) combos *= d;
    for (int v = 0; v < d; ++v) {
        x1[i] = v;
        for (std::size_t c = 0; c < combos; ++c) {
            std::size_t rem = c;
            for (int pos : masked) {
                x1[pos] = static_cast<int>(rem % d);
                rem /= d;
            }
            w[v] += p1.prob(x1);
        }
    }
    double total = 0.0;
    for (double v : w) total += v;
    if (total <= 0.0) {
        throw unsupported_context_error("unmasked context has zero probability");
    }
    for (double& v : w) v /= total;
    return w;
}

namespace {

// Position index if z -> x is a single-token unmasking, else -1.
int unmask_position(const State& z, const State& x, int mask) {
    int pos = -1;
    for (std::size_t i = 0; i < z.size(); ++i) {
        if (z[i] == x[i]) continue;
        if (z[i] == mask && x[i] != mask && pos < 0) {
            pos = static_cast<int>(i);
        } else {
            return -1;
        }
    }
    return pos;
}

} // namespace

double concrete_score(const TargetDistribution& p1, double alpha,
                      const State& z, const State& x) {
    const int mask = p1.space().mask();
    const int pos = unmask_position(z, x, mask);
    if (pos < 0) throw parameter_error("concrete_score needs a single-token unmasking z->x");
    const double pz = marginal(p1, alpha, z);
    if (pz <= 0.0) throw unsupported_context_error("score undefined: p_t(z) = 0");
    const double direct = marginal(p1, alpha, x) / pz;
    const double factored =
        alpha / (1.0 - alpha) * token_posterior(p1, z, pos)[static_cast<std::size_t>(x[pos])];
    const double scale = std::max({std::fabs(direct), std::fabs(factored), 1e-300});
    if (std::fabs(direct - factored) / scale > 1e-9) {
        throw std::logic_error("score factorization mismatch");
    }
    return direct;
}

std::vector<double> SparseRate::apply(const std::vector<double>& p) const {
    std::vector<double> out(n_states, 0.0);
    for (std::size_t z = 0; z < n_states; ++z) {
        out[z] += p[z] * diag[z];
        for (const auto& [x, q] : off[z]) out[x] += p[z] * q;
    }
    return out;
}

SparseRate rate_matrix(const TargetDistribution& p1, const MaskSchedule& alpha, double t) {
    if (!(t > 0.0 && t < 1.0)) throw parameter_error("rate_matrix requires t in (0,1)");
    const double a = alpha.alpha(t);
    if (!(a > 0.0 && a < 1.0)) throw parameter_error("rate_matrix requires alpha(t) in (0,1)");
    const double s = alpha.sigma(t);
    const auto& space = p1.space();
    const int n = space.n(), d = space.d(), mask = space.mask();

    SparseRate Q;
    Q.n_states = space.size();
    Q.off.resize(space.size());
    Q.diag.assign(space.size(), 0.0);
    for (std::size_t zi = 0; zi < space.size(); ++zi) {
        State z = space.state(zi);
        const double pz = marginal(p1, a, z);
        if (pz <= 0.0) continue; // unreachable state: keep a zero row
        double row = 0.0;
        for (int i = 0; i < n; ++i) {
            if (z[i] != mask) continue;
            for (int v = 0; v < d; ++v) {
                State x = z;
                x[i] = v;
                const double px = marginal(p1, a, x);
                if (px <= 0.0) continue;
                const double q = s * px / pz;
                Q.off[zi].emplace_back(space.index(x), q);
                row += q;
            }
        }
        Q.diag[zi] = -row;
    }
    return Q;
}

double conditional_rate(const MaskSchedule& alpha, double t,
                        const State& z, const State& x, const State& x1) {
    if (!(t > 0.0 && t < 1.0)) throw parameter_error("conditional_rate requires t in (0,1)");
    const int n = static_cast<int>(z.size());
    // The mask symbol is strictly larger than every clean token, so any masked
    // position of z holds a value above max(x1); recover it without threading
    // a vocab object through.
    int d = 0;
    for (int v : x1) d = std::max(d, v + 1);
    for (int v : z) d = std::max(d, v);
    int masked_z = 0;
    for (int i = 0; i < n; ++i) {
        if (z[i] == x1[i]) continue;
        if (z[i] != d) throw incompatible_state_error("z is not reachable from x1");
        ++masked_z;
    }
    const double a = alpha.alpha(t);
    const double rate = alpha.sigma(t) * a / (1.0 - a);
    if (z == x) { // diagonal: minus the sum over the m(z) unmaskings
        return -static_cast<double>(masked_z) * rate;
    }
    // Off-diagonal: exactly one masked position of z reveals x1's token.
    int pos = -1;
    for (int i = 0; i < n; ++i) {
        if (z[i] == x[i]) continue;
        if (z[i] == d && pos < 0) {
            pos = i;
        } else {
            return 0.0;
        }
    }
    if (pos < 0) return 0.0;
    return x[pos] == x1[pos] ? rate : 0.0;
}

double forward_residual(const TargetDistribution& p1, const MaskSchedule& alpha,
                        double t, double h) {
    if (!(t - h > 0.0 && t + h < 1.0)) throw parameter_error("forward_residual: t +/- h outside (0,1)");
    const auto lo = flow_snapshot(p1, alpha.alpha(t - h), t - h);
    const auto hi = flow_snapshot(p1, alpha.alpha(t + h), t + h);
    const auto mid = flow_snapshot(p1, alpha.alpha(t), t);
    const auto Q = rate_matrix(p1, alpha, t);
    const auto gen = Q.apply(mid.marginals);
    double worst = 0.0;
    for (std::size_t i = 0; i < gen.size(); ++i) {
        const double fd = (hi.marginals[i] - lo.marginals[i]) / (2.0 * h);
        worst = std::max(worst, std::fabs(fd - gen[i]));
    }
    return worst;
}

} // namespace mdm
