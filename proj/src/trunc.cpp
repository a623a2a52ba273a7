#include "riskgrad/trunc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

#include "riskgrad/errors.hpp"
#include "riskgrad/spectral.hpp"

namespace riskgrad {

namespace {

// Taylor partial sums of e^x around the truncation knee.
double series4(double x) {
    return 1.0 + x + x * x / 2.0 + x * x * x / 6.0 + x * x * x * x / 24.0;
}
double series3(double x) { return 1.0 + x + x * x / 2.0 + x * x * x / 6.0; }

constexpr double kLogOverflow = 700.0;

double exp_capped(double log_v) {
    if (log_v > kLogOverflow) return std::numeric_limits<double>::infinity();
    return std::exp(log_v);
}

}  // namespace

double cycle_log_weight(const Cycle& cycle, double alpha, double Lambda) {
    double s = 0.0;
    for (double c : cycle.costs) s += alpha * c;
    return s - static_cast<double>(cycle.tau) * Lambda;
}

double cycle_weight(const Cycle& cycle, double alpha, double Lambda) {
    return exp_capped(cycle_log_weight(cycle, alpha, Lambda));
}

double hard_trunc(double h, double m) { return std::min(h, m); }

double hard_trunc_log(double log_h, double m) {
    if (log_h > std::log(m)) return m;
    return std::exp(log_h);
}

double smooth_trunc_log(double log_h, double m) {
    const double log_m = std::log(m);
    if (log_h <= log_m) return std::exp(log_h);
    return m * series4(log_h - log_m);
}

double smooth_trunc(double h, double m) { return smooth_trunc_log(std::log(h), m); }

double smooth_trunc_deriv_weight_log(double log_h, double m) {
    const double log_m = std::log(m);
    if (log_h <= log_m) return std::exp(log_h);
    return m * series3(log_h - log_m);
}

double smooth_trunc_deriv_weight(double h, double m) {
    return smooth_trunc_deriv_weight_log(std::log(h), m);
}

Vector grad_estimate(const Cycle& cycle, double alpha, double Lambda, double m) {
    const int l = cycle.scores.cols();
    if (cycle.scores.rows() != cycle.tau && l > 0)
        throw MissingScores("grad_estimate: cycle carries no per-step scores");
    Vector f(l, 0.0);
    if (l == 0) return f;

    const double log_h = cycle_log_weight(cycle, alpha, Lambda);
    const double g = smooth_trunc_log(log_h, m);
    const double w = smooth_trunc_deriv_weight_log(log_h, m);

    Vector sum_scores(l, 0.0);
    Vector sum_cost_grads(l, 0.0);
    for (long i = 0; i < cycle.tau; ++i) {
        const double* sc = cycle.scores.row(static_cast<int>(i));
        const double* cg = cycle.cost_grads.row(static_cast<int>(i));
        for (int k = 0; k < l; ++k) {
            sum_scores[k] += sc[k];
            sum_cost_grads[k] += alpha * cg[k];
        }
    }
    for (int k = 0; k < l; ++k) f[k] = g * sum_scores[k] + w * sum_cost_grads[k];
    return f;
}

ExcursionSystem excursion_system(const ChainInstance& chain) {
    ExcursionSystem sys;
    sys.n_states = chain.n_states;
    sys.x_star = chain.x_star;
    sys.c_upper = chain.cost[0];
    for (double c : chain.cost) sys.c_upper = std::max(sys.c_upper, c);
    sys.edges_from.resize(chain.n_states);
    for (int x = 0; x < chain.n_states; ++x)
        for (int y = 0; y < chain.n_states; ++y)
            if (chain.kernel(x, y) > 0.0)
                sys.edges_from[x].push_back({y, chain.kernel(x, y), chain.cost[x]});
    return sys;
}

ExcursionSystem excursion_system(const MdpModel& mdp, const SoftmaxPolicy& policy) {
    ExcursionSystem sys;
    sys.n_states = mdp.n_states;
    sys.x_star = mdp.s_star;
    sys.c_upper = mdp.c_upper;
    sys.edges_from.resize(mdp.n_states);
    for (int s = 0; s < mdp.n_states; ++s) {
        const Vector mu = policy.probs(s);
        for (int a = 0; a < mdp.n_actions; ++a) {
            const double* prow = mdp.p_row(s, a);
            for (int s2 = 0; s2 < mdp.n_states; ++s2) {
                const double p = mu[a] * prow[s2];
                if (p > 0.0) sys.edges_from[s].push_back({s2, p, mdp.cost(s, a)});
            }
        }
    }
    return sys;
}

namespace {

double truncated_weight(double log_h, double m, TruncMode mode) {
    return mode == TruncMode::Hard ? hard_trunc_log(log_h, m) : smooth_trunc_log(log_h, m);
}

// Upper bound on the truncated weight of any cycle of length tau, from
// ln H <= tau * (alpha C_upper - Lambda).
double tail_weight_bound(long tau, double d_hat, double m, TruncMode mode) {
    const double log_h = static_cast<double>(tau) * d_hat;
    const double log_m = std::log(m);
    if (log_h <= log_m) return exp_capped(log_h);
    if (mode == TruncMode::Hard) return m;
    return m * series4(log_h - log_m);
}

// quantized (cost sum, state) key; 2^-32 resolution is far below every
// tolerance the enumeration feeds.
long long pack_key(double cost_sum, int state) {
    const long long q = std::llround(cost_sum * 4294967296.0);
    return q * 64 + state;
}

struct Level {
    // key -> (probability mass, representative exact cost sum)
    std::map<long long, std::pair<double, double>> entries;
};

constexpr std::size_t kStateBudget = 4000000;

}  // namespace

Estimate g_trunc_enumerate(const ExcursionSystem& sys, double alpha, double Lambda, double m,
                           TruncMode mode, int depth) {
    if (depth < 1) throw ValidationError("g_trunc: depth must be >= 1");
    const double d_hat = alpha * sys.c_upper - Lambda;

    double value = 0.0;
    Level level;
    std::size_t visited = 0;

    // First transition out of x*.
    for (const auto& e : sys.edges_from[sys.x_star]) {
        const double s = e.cost;
        if (e.to == sys.x_star) {
            value += e.prob * truncated_weight(alpha * s - Lambda, m, mode);
        } else {
            auto& slot = level.entries[pack_key(s, e.to)];
            if (slot.first == 0.0) slot.second = s;
            slot.first += e.prob;
        }
    }

    for (long k = 2; k <= depth && !level.entries.empty(); ++k) {
        Level next;
        for (const auto& [key, ps] : level.entries) {
            const int y = static_cast<int>(((key % 64) + 64) % 64);
            const double prob = ps.first;
            const double s = ps.second;
            for (const auto& e : sys.edges_from[y]) {
                const double s2 = s + e.cost;
                if (e.to == sys.x_star) {
                    value += prob * e.prob *
                             truncated_weight(alpha * s2 - static_cast<double>(k) * Lambda, m,
                                              mode);
                } else {
                    auto& slot = next.entries[pack_key(s2, e.to)];
                    if (slot.first == 0.0) slot.second = s2;
                    slot.first += prob * e.prob;
                }
            }
        }
        visited += next.entries.size();
        if (visited > kStateBudget)
            throw DepthTooSmall("g_trunc enumeration exceeded its state budget");
        level = std::move(next);
    }

    // Certified tail bound for paths longer than `depth`. Mass still alive is
    // grouped per state; blocks of n steps contract it by the n-step escape
    // norm r < 1, while the per-cycle weight grows at most polynomially.
    Estimate out;
    out.value = value;
    if (level.entries.empty()) {
        out.error_bound = 0.0;
        return out;
    }

    double alive = 0.0;
    for (const auto& [key, ps] : level.entries) alive += ps.first;

    const int n = sys.n_states;
    Matrix b0(n, n, 0.0);
    for (int y = 0; y < n; ++y) {
        if (y == sys.x_star) continue;
        for (const auto& e : sys.edges_from[y])
            if (e.to != sys.x_star) b0(y, e.to) += e.prob;
    }
    Matrix bn = Matrix::identity(n);
    for (int i = 0; i < n; ++i) bn = mat_mul(bn, b0);
    double r = 0.0;
    for (int y = 0; y < n; ++y) {
        if (y == sys.x_star) continue;
        double row = 0.0;
        for (int z = 0; z < n; ++z) row += bn(y, z);
        r = std::max(r, row);
    }
    if (!(r < 1.0))
        throw DepthTooSmall("g_trunc tail: excursions do not contract within n steps");

    // Block j covers tau in (depth + j*n, depth + (j+1)*n]; the weight bound
    // is monotone in tau, so the block maximum sits at one of the endpoints.
    const auto block_bound = [&](long j) {
        const double left = tail_weight_bound(depth + j * n + 1, d_hat, m, mode);
        const double right = tail_weight_bound(depth + (j + 1) * n, d_hat, m, mode);
        return std::max(left, right);
    };

    double tail = 0.0;
    double block_mass = alive;
    const double threshold = 1e-30 * (1.0 + std::abs(value));
    for (long j = 0; j < 100000; ++j) {
        const double term = block_mass * block_bound(j);
        tail += term;
        block_mass *= r;
        // Term ratios r * UB(j+1)/UB(j) are non-increasing, so once below 1
        // the remainder is geometrically dominated.
        const double c = r * block_bound(j + 1) / std::max(block_bound(j), 1e-300);
        if (c < 0.999 && term * c / (1.0 - c) < threshold && j > 2) {
            out.error_bound = tail + term * c / (1.0 - c);
            return out;
        }
    }
    throw DepthTooSmall("g_trunc tail bound did not converge");
}

Estimate g_trunc_montecarlo(const ChainInstance& chain, double alpha, double Lambda, double m,
                            TruncMode mode, long n, Rng& rng) {
    double sum = 0.0;
    double sum_sq = 0.0;
    Cycle cycle;
    for (long i = 0; i < n; ++i) {
        sample_cycle(chain, rng, 1000000, cycle);
        const double w = truncated_weight(cycle_log_weight(cycle, alpha, Lambda), m, mode);
        sum += w;
        sum_sq += w * w;
    }
    Estimate out;
    out.value = sum / static_cast<double>(n);
    const double var =
        std::max(0.0, sum_sq / static_cast<double>(n) - out.value * out.value);
    out.error_bound = std::sqrt(var / static_cast<double>(n));
    return out;
}

double g_trunc_exact(const ExcursionSystem& sys, double alpha, double Lambda, double m,
                     TruncMode mode, double tol) {
    for (int depth = 64; depth <= 16384; depth *= 2) {
        const Estimate est = g_trunc_enumerate(sys, alpha, Lambda, m, mode, depth);
        if (est.error_bound <= tol) return est.value;
    }
    throw DepthTooSmall("g_trunc_exact: tail bound above tolerance at maximum depth");
}

double lambda_trunc(const ExcursionSystem& sys, double alpha, double m, TruncMode mode,
                    double tol) {
    if (!(m > 1.0)) throw ValidationError("lambda_trunc: M must be > 1");
    const double g_tol = std::min(1e-12, tol);
    const auto g_at = [&](double Lambda) {
        return g_trunc_exact(sys, alpha, Lambda, m, mode, g_tol);
    };

    double hi = alpha * sys.c_upper;
    const double g_hi = g_at(hi);
    if (std::abs(g_hi - 1.0) <= 1e-13) return hi;

    double step = 1.0;
    double lo = hi - step;
    int doublings = 0;
    while (g_at(lo) <= 1.0) {
        if (++doublings > 60)
            throw BracketFailure("lambda_trunc: no sign change after 60 doublings");
        step *= 2.0;
        lo = hi - step;
    }
    while (hi - lo > tol) {
        const double mid = 0.5 * (hi + lo);
        if (g_at(mid) > 1.0) lo = mid;
        else hi = mid;
    }
    return 0.5 * (hi + lo);
}

double lambda_trunc(const ChainInstance& chain, double alpha, double m, TruncMode mode,
                    double tol) {
    return lambda_trunc(excursion_system(chain), alpha, m, mode, tol);
}

double lambda_trunc(const MdpModel& mdp, const SoftmaxPolicy& policy, double alpha, double m,
                    TruncMode mode, double tol) {
    return lambda_trunc(excursion_system(mdp, policy), alpha, m, mode, tol);
}

std::vector<double> build_ladder(const ChainModel& model, double alpha, int levels,
                                 const LadderOptions& opts) {
    // Kronecker sequence on the theta box stands in for the sup over theta.
    static const double kIrr[] = {0.41421356237309515, 0.7320508075688772, 0.2360679774997896,
                                  0.6457513110645906,  0.3166247903553998, 0.6055512754639891,
                                  0.1231056256176605,  0.3588989435406736};
    std::vector<Vector> grid;
    for (int i = 0; i < opts.grid_points; ++i) {
        Vector theta(model.param_dim, 0.0);
        for (int j = 0; j < model.param_dim; ++j) {
            const double u = std::fmod((i + 0.5) * kIrr[j % 8], 1.0);
            theta[j] = opts.theta_low + u * (opts.theta_high - opts.theta_low);
        }
        grid.push_back(std::move(theta));
    }
    if (model.param_dim == 0) grid.assign(1, Vector{});

    std::vector<ExcursionSystem> systems;
    std::vector<double> lambdas;
    for (const auto& theta : grid) {
        const ChainInstance inst = model.at(theta);
        systems.push_back(excursion_system(inst));
        lambdas.push_back(solve(inst, alpha).Lambda);
    }

    std::vector<double> rungs;
    double m = 2.0;
    for (int i = 0; i < levels; ++i) {
        const double target = 1.0 / ((i + 1.0) * (i + 1.0));
        for (;;) {
            double worst = 0.0;
            for (std::size_t j = 0; j < grid.size(); ++j) {
                const double lt = lambda_trunc(systems[j], alpha, m, opts.mode);
                worst = std::max(worst, lambdas[j] - lt);
            }
            if (worst < target) break;
            m *= 2.0;
            if (m > opts.max_rung)
                throw LadderExhausted("build_ladder: gap target unreachable below 2^40 at level " +
                                      std::to_string(i));
        }
        rungs.push_back(m);
        m *= 2.0;  // keeps the ladder strictly increasing
    }
    return rungs;
}

}  // namespace riskgrad
