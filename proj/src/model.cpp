#include "riskgrad/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "riskgrad/errors.hpp"

namespace riskgrad {

namespace {

constexpr double kRowSumTol = 1e-9;
constexpr double kSupportEps = 0.0;  // support = strictly positive entries

void check_rows_stochastic(const Matrix& kernel, const std::string& what) {
    for (int i = 0; i < kernel.rows(); ++i) {
        double s = 0.0;
        for (int j = 0; j < kernel.cols(); ++j) {
            const double v = kernel(i, j);
            if (v < 0.0)
                throw RowSumViolation(what + " row " + std::to_string(i) +
                                      " has a negative entry");
            s += v;
        }
        if (std::abs(s - 1.0) > kRowSumTol)
            throw RowSumViolation(what + " row " + std::to_string(i) + " sums to " +
                                  std::to_string(s));
    }
}

// Boolean support digraph reachability from x (forward or backward).
std::vector<bool> reachable(const Matrix& kernel, int from, bool forward) {
    const int n = kernel.rows();
    std::vector<bool> seen(n, false);
    std::vector<int> stack{from};
    seen[from] = true;
    while (!stack.empty()) {
        const int u = stack.back();
        stack.pop_back();
        for (int v = 0; v < n; ++v) {
            const double p = forward ? kernel(u, v) : kernel(v, u);
            if (p > kSupportEps && !seen[v]) {
                seen[v] = true;
                stack.push_back(v);
            }
        }
    }
    return seen;
}

// gcd of return times to x_star up to depth 2n, via boolean support powers.
long long return_time_gcd(const Matrix& kernel, int x_star) {
    const int n = kernel.rows();
    std::vector<std::vector<bool>> supp(n, std::vector<bool>(n, false));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) supp[i][j] = kernel(i, j) > kSupportEps;

    std::vector<bool> cur(n, false);
    cur[x_star] = true;
    long long g = 0;
    for (int t = 1; t <= 2 * n; ++t) {
        std::vector<bool> next(n, false);
        for (int i = 0; i < n; ++i) {
            if (!cur[i]) continue;
            for (int j = 0; j < n; ++j)
                if (supp[i][j]) next[j] = true;
        }
        cur = std::move(next);
        if (cur[x_star]) g = std::gcd(g, static_cast<long long>(t));
        if (g == 1) break;
    }
    return g;
}

// Primitivity fallback: an irreducible nonnegative matrix of order n is
// primitive iff B^k is entrywise positive at the Wielandt exponent
// n^2 - 2n + 2; any power >= that works, so check a power of two above it.
bool support_power_positive(const Matrix& kernel) {
    const int n = kernel.rows();
    std::vector<std::vector<bool>> b(n, std::vector<bool>(n, false));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) b[i][j] = kernel(i, j) > kSupportEps;
    const int target = n * n - 2 * n + 2;
    int k = 1;
    while (k < target) {
        std::vector<std::vector<bool>> sq(n, std::vector<bool>(n, false));
        for (int i = 0; i < n; ++i)
            for (int l = 0; l < n; ++l)
                if (b[i][l])
                    for (int j = 0; j < n; ++j)
                        if (b[l][j]) sq[i][j] = true;
        b = std::move(sq);
        k *= 2;
    }
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (!b[i][j]) return false;
    return true;
}

}  // namespace

ChainInstance ChainModel::at(const Vector& theta) const {
    ChainInstance inst;
    inst.n_states = n_states;
    inst.x_star = x_star;
    inst.param_dim = param_dim;
    inst.c_lower = c_lower;
    inst.c_upper = c_upper;
    inst.kernel = kernel(theta);
    inst.cost = cost(theta);
    inst.score = score ? score(theta) : Matrix(n_states * n_states, param_dim, 0.0);
    inst.cost_grad = cost_grad ? cost_grad(theta) : Matrix(n_states, param_dim, 0.0);
    return inst;
}

void MdpModel::finalize() {
    check_rows_stochastic(transition, "mdp transition");
    c_lower = c_upper = cost(0, 0);
    for (int s = 0; s < n_states; ++s)
        for (int a = 0; a < n_actions; ++a) {
            c_lower = std::min(c_lower, cost(s, a));
            c_upper = std::max(c_upper, cost(s, a));
        }
}

Vector SoftmaxPolicy::probs(int s) const {
    Vector p(n_actions);
    const double* row = logits.data() + static_cast<std::size_t>(s) * n_actions;
    double mx = row[0];
    for (int a = 1; a < n_actions; ++a) mx = std::max(mx, row[a]);
    double z = 0.0;
    for (int a = 0; a < n_actions; ++a) {
        p[a] = std::exp(row[a] - mx);
        z += p[a];
    }
    for (int a = 0; a < n_actions; ++a) p[a] /= z;
    return p;
}

Vector policy_score(const SoftmaxPolicy& policy, int s, int a) {
    if (s < 0 || s >= policy.n_states || a < 0 || a >= policy.n_actions)
        throw ValidationError("policy_score: state or action index out of range");
    Vector g(policy.param_dim(), 0.0);
    const Vector mu = policy.probs(s);
    double* block = g.data() + static_cast<std::size_t>(s) * policy.n_actions;
    for (int a2 = 0; a2 < policy.n_actions; ++a2) block[a2] = -mu[a2];
    block[a] += 1.0;
    return g;
}

DiagnosticsReport validate_kernel(const Matrix& kernel, int x_star) {
    DiagnosticsReport rep;
    const int n = kernel.rows();
    for (int i = 0; i < n; ++i) {
        double s = 0.0;
        for (int j = 0; j < n; ++j) {
            if (kernel(i, j) < 0.0)
                throw RowSumViolation("kernel row " + std::to_string(i) +
                                      " has a negative entry");
            s += kernel(i, j);
        }
        rep.row_sum_residual = std::max(rep.row_sum_residual, std::abs(s - 1.0));
        if (std::abs(s - 1.0) > kRowSumTol)
            throw RowSumViolation("kernel row " + std::to_string(i) + " sums to " +
                                  std::to_string(s));
    }

    const auto fwd = reachable(kernel, x_star, true);
    const auto bwd = reachable(kernel, x_star, false);
    rep.irreducible = true;
    for (int i = 0; i < n; ++i)
        if (!fwd[i] || !bwd[i]) rep.irreducible = false;

    if (rep.irreducible) {
        const long long g = return_time_gcd(kernel, x_star);
        rep.aperiodic = (g == 1) || support_power_positive(kernel);
    }
    return rep;
}

DiagnosticsReport validate_chain(const ChainModel& model, const Vector& theta) {
    const ChainInstance inst = model.at(theta);
    DiagnosticsReport rep = validate_kernel(inst.kernel, inst.x_star);

    for (double c : inst.cost)
        if (c < model.c_lower - 1e-12 || c > model.c_upper + 1e-12)
            rep.cost_in_bounds = false;

    // Score consistency: central finite differences of P against P * L.
    const double step = 1e-6;
    const int l = model.param_dim;
    for (int k = 0; k < l; ++k) {
        Vector tp = theta, tm = theta;
        tp[k] += step;
        tm[k] -= step;
        const Matrix pp = model.kernel(tp);
        const Matrix pm = model.kernel(tm);
        for (int x = 0; x < inst.n_states; ++x)
            for (int y = 0; y < inst.n_states; ++y) {
                const double p = inst.kernel(x, y);
                if (p <= 0.0) continue;
                const double fd = (pp(x, y) - pm(x, y)) / (2.0 * step);
                const double expected = p * inst.score_at(x, y)[k];
                rep.score_residual = std::max(rep.score_residual, std::abs(fd - expected));
            }
    }
    return rep;
}

InducedKernels induced_kernels(const MdpModel& mdp, const SoftmaxPolicy& policy, double alpha) {
    if (alpha <= 0.0) throw ValidationError("induced_kernels: alpha must be positive");
    InducedKernels out;
    out.state_kernel = Matrix(mdp.n_states, mdp.n_states, 0.0);
    out.hat_kernel = Matrix(mdp.n_states, mdp.n_states, 0.0);
    for (int s = 0; s < mdp.n_states; ++s) {
        const Vector mu = policy.probs(s);
        for (int a = 0; a < mdp.n_actions; ++a) {
            const double* prow = mdp.p_row(s, a);
            const double w = mu[a];
            const double wh = w * std::exp(alpha * mdp.cost(s, a));
            for (int s2 = 0; s2 < mdp.n_states; ++s2) {
                out.state_kernel(s, s2) += w * prow[s2];
                out.hat_kernel(s, s2) += wh * prow[s2];
            }
        }
    }
    return out;
}

}  // namespace riskgrad
