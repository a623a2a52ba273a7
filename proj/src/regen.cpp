#include "riskgrad/regen.hpp"

#include <cmath>
#include <limits>

#include "riskgrad/errors.hpp"
#include "riskgrad/model.hpp"
#include "riskgrad/spectral.hpp"

namespace riskgrad {

namespace {

constexpr double kRadiusGuard = 1.0 - 1e-10;

// Pieces of A = e^{-Lambda} hat split around x*: B is A off x*, b the column
// into x*, r the x*-row off x*, a00 the direct-return entry.
struct Restricted {
    Matrix b_mat;   // (n-1) x (n-1)
    Vector b_col;   // (n-1)
    Vector r_row;   // (n-1)
    double a00;
    std::vector<int> idx;  // restricted position -> state
};

Restricted restrict_hat(const Matrix& hat, int x_star, double Lambda) {
    const int n = hat.rows();
    const double scale = std::exp(-Lambda);
    Restricted r;
    r.idx.reserve(n - 1);
    for (int x = 0; x < n; ++x)
        if (x != x_star) r.idx.push_back(x);
    const int m = n - 1;
    r.b_mat = Matrix(m, m);
    r.b_col = Vector(m);
    r.r_row = Vector(m);
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) r.b_mat(i, j) = scale * hat(r.idx[i], r.idx[j]);
        r.b_col[i] = scale * hat(r.idx[i], x_star);
        r.r_row[i] = scale * hat(x_star, r.idx[i]);
    }
    r.a00 = scale * hat(x_star, x_star);
    return r;
}

}  // namespace

GValue g_exact_hat(const Matrix& hat, int x_star, double Lambda) {
    const Restricted r = restrict_hat(hat, x_star, Lambda);
    if (r.idx.empty()) return {r.a00, false};
    if (spectral_radius(r.b_mat) >= kRadiusGuard)
        return {std::numeric_limits<double>::infinity(), true};
    Matrix sys = r.b_mat;
    for (int i = 0; i < sys.rows(); ++i) {
        for (int j = 0; j < sys.cols(); ++j) sys(i, j) = -sys(i, j);
        sys(i, i) += 1.0;
    }
    const Vector u = solve_linear(sys, r.b_col);
    return {r.a00 + dot(r.r_row, u), false};
}

GValue g_exact(const ChainInstance& chain, double alpha, double Lambda) {
    return g_exact_hat(hat_kernel(chain.kernel, chain.cost, alpha), chain.x_star, Lambda);
}

GValue g_exact(const MdpModel& mdp, const SoftmaxPolicy& policy, double alpha, double Lambda) {
    return g_exact_hat(induced_kernels(mdp, policy, alpha).hat_kernel, mdp.s_star, Lambda);
}

double dg_dLambda_exact_hat(const Matrix& hat, int x_star, double Lambda) {
    const Restricted r = restrict_hat(hat, x_star, Lambda);
    if (r.idx.empty()) return -r.a00;  // g = a00 = e^{alpha c - Lambda}
    if (spectral_radius(r.b_mat) >= kRadiusGuard)
        throw SingularSystem("dg/dLambda: g diverges at this Lambda");
    Matrix sys = r.b_mat;
    for (int i = 0; i < sys.rows(); ++i) {
        for (int j = 0; j < sys.cols(); ++j) sys(i, j) = -sys(i, j);
        sys(i, i) += 1.0;
    }
    const Vector u = solve_linear(sys, r.b_col);
    const double g = r.a00 + dot(r.r_row, u);
    // dA/dLambda = -A gives dg/dLambda = -g - r (I-B)^{-1} u.
    const Vector w = solve_linear(sys, u);
    return -g - dot(r.r_row, w);
}

double dg_dLambda_exact(const ChainInstance& chain, double alpha, double Lambda) {
    return dg_dLambda_exact_hat(hat_kernel(chain.kernel, chain.cost, alpha), chain.x_star,
                                Lambda);
}

FirstPassageResult h_via_first_passage(const Matrix& hat, int x_star, double Lambda_theta) {
    FirstPassageResult out;
    double Lambda = Lambda_theta;
    Restricted r = restrict_hat(hat, x_star, Lambda);
    if (!r.idx.empty() && spectral_radius(r.b_mat) >= kRadiusGuard) {
        Lambda = Lambda_theta + 1e-9;
        out.shifted = true;
        r = restrict_hat(hat, x_star, Lambda);
        if (spectral_radius(r.b_mat) >= kRadiusGuard)
            throw SingularSystem("h_via_first_passage: restricted radius at 1 after shift");
    }
    out.lambda_used = Lambda;

    const int n = hat.rows();
    out.h = Vector(n, 1.0);
    if (r.idx.empty()) return out;

    Matrix sys = r.b_mat;
    for (int i = 0; i < sys.rows(); ++i) {
        for (int j = 0; j < sys.cols(); ++j) sys(i, j) = -sys(i, j);
        sys(i, i) += 1.0;
    }
    const Vector u = solve_linear(sys, r.b_col);
    for (std::size_t i = 0; i < r.idx.size(); ++i) out.h[r.idx[i]] = u[i];
    out.h[x_star] = r.a00 + dot(r.r_row, u);  // equals g(Lambda_theta), which is 1
    return out;
}

void sample_cycle(const ChainInstance& chain, Rng& rng, long cap, Cycle& out) {
    out.clear();
    const int n = chain.n_states;
    const int l = chain.param_dim;
    std::vector<const double*> score_rows;
    std::vector<int> state_seq;
    int x = chain.x_star;
    long tau = 0;
    for (;;) {
        if (tau >= cap)
            throw CycleCapExceeded("cycle exceeded cap of " + std::to_string(cap) + " steps");
        const int y = rng.sample(chain.kernel.row(x), n);
        out.states.push_back(x);
        out.costs.push_back(chain.cost[x]);
        score_rows.push_back(chain.score_at(x, y));
        state_seq.push_back(x);
        ++tau;
        if (y == chain.x_star) break;
        x = y;
    }
    out.tau = tau;
    out.scores = Matrix(static_cast<int>(tau), l);
    out.cost_grads = Matrix(static_cast<int>(tau), l);
    for (long i = 0; i < tau; ++i)
        for (int k = 0; k < l; ++k) {
            out.scores(static_cast<int>(i), k) = score_rows[i][k];
            out.cost_grads(static_cast<int>(i), k) = chain.cost_grad(state_seq[i], k);
        }
}

Cycle sample_cycle(const ChainInstance& chain, Rng& rng, long cap) {
    Cycle c;
    sample_cycle(chain, rng, cap, c);
    return c;
}

void sample_cycle(const MdpModel& mdp, const SoftmaxPolicy& policy, Rng& rng, long cap,
                  Cycle& out) {
    out.clear();
    const int l = policy.param_dim();
    std::vector<std::pair<int, int>> sa_seq;
    int s = mdp.s_star;
    long tau = 0;
    for (;;) {
        if (tau >= cap)
            throw CycleCapExceeded("cycle exceeded cap of " + std::to_string(cap) + " steps");
        const Vector mu = policy.probs(s);
        const int a = rng.sample(mu.data(), mdp.n_actions);
        const int s2 = rng.sample(mdp.p_row(s, a), mdp.n_states);
        out.states.push_back(s);
        out.actions.push_back(a);
        out.costs.push_back(mdp.cost(s, a));
        sa_seq.emplace_back(s, a);
        ++tau;
        if (s2 == mdp.s_star) break;
        s = s2;
    }
    out.tau = tau;
    out.scores = Matrix(static_cast<int>(tau), l);
    out.cost_grads = Matrix(static_cast<int>(tau), l, 0.0);
    for (long i = 0; i < tau; ++i) {
        const auto [si, ai] = sa_seq[i];
        const Vector mu = policy.probs(si);
        double* row = out.scores.row(static_cast<int>(i));
        double* block = row + static_cast<std::size_t>(si) * mdp.n_actions;
        for (int a2 = 0; a2 < mdp.n_actions; ++a2) block[a2] = -mu[a2];
        block[ai] += 1.0;
    }
}

Cycle sample_cycle(const MdpModel& mdp, const SoftmaxPolicy& policy, Rng& rng, long cap) {
    Cycle c;
    sample_cycle(mdp, policy, rng, cap, c);
    return c;
}

}  // namespace riskgrad
