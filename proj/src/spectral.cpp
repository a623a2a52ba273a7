#include "riskgrad/spectral.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "riskgrad/errors.hpp"

namespace riskgrad {

Matrix hat_kernel(const Matrix& kernel, const Vector& cost, double alpha) {
    Matrix hat(kernel.rows(), kernel.cols());
    for (int x = 0; x < kernel.rows(); ++x) {
        const double w = std::exp(alpha * cost[x]);
        for (int y = 0; y < kernel.cols(); ++y) hat(x, y) = w * kernel(x, y);
    }
    return hat;
}

PerronResult perron(const Matrix& hat, int x_star, double tol, long max_iters) {
    const int n = hat.rows();
    Vector v(n, 1.0);
    double lambda = 0.0;
    for (long iter = 0; iter < max_iters; ++iter) {
        Vector w = mat_vec(hat, v);
        double lo = std::numeric_limits<double>::infinity();
        double hi = 0.0;
        for (int x = 0; x < n; ++x) {
            const double r = w[x] / v[x];
            lo = std::min(lo, r);
            hi = std::max(hi, r);
        }
        lambda = 0.5 * (lo + hi);
        // Renormalize so the eigenvector keeps h(x_star) = 1 throughout.
        const double scale = w[x_star];
        if (!(scale > 0.0) || !std::isfinite(scale))
            throw NoConvergence("perron: iterate lost positivity at x*");
        for (int x = 0; x < n; ++x) v[x] = w[x] / scale;
        if (hi - lo <= tol * hi) return {lambda, v};
    }
    throw NoConvergence("perron: Collatz-Wielandt gap did not close in " +
                        std::to_string(max_iters) + " iterations");
}

Vector stationary_distribution(const Matrix& kernel, double tol, long max_iters) {
    const int n = kernel.rows();
    Vector u(n, 1.0 / n);
    for (long iter = 0; iter < max_iters; ++iter) {
        Vector w = vec_mat(u, kernel);
        double z = 0.0;
        for (double x : w) z += x;
        for (double& x : w) x /= z;
        double gap = 0.0;
        for (int i = 0; i < n; ++i) gap = std::max(gap, std::abs(w[i] - u[i]));
        u = std::move(w);
        if (gap <= tol) return u;
    }
    throw NoConvergence("stationary_distribution: no fixed point within iteration budget");
}

SpectralSolution solve_hat(const Matrix& hat, int x_star, double tol) {
    const int n = hat.rows();
    SpectralSolution sol;
    const PerronResult pr = perron(hat, x_star, tol);
    sol.lambda = pr.lambda;
    sol.Lambda = std::log(pr.lambda);
    sol.h = pr.h;

    sol.twisted = Matrix(n, n, 0.0);
    for (int x = 0; x < n; ++x) {
        const double denom = sol.lambda * sol.h[x];
        for (int y = 0; y < n; ++y) sol.twisted(x, y) = hat(x, y) * sol.h[y] / denom;
    }
    sol.pi_check = stationary_distribution(sol.twisted, tol);

    const Vector hh = mat_vec(hat, sol.h);
    sol.residual = 0.0;
    for (int x = 0; x < n; ++x)
        sol.residual = std::max(sol.residual, std::abs(sol.h[x] - hh[x] / sol.lambda));
    return sol;
}

SpectralSolution solve(const ChainInstance& chain, double alpha, double tol) {
    return solve_hat(hat_kernel(chain.kernel, chain.cost, alpha), chain.x_star, tol);
}

SpectralSolution solve(const MdpModel& mdp, const SoftmaxPolicy& policy, double alpha,
                       double tol) {
    return solve_hat(induced_kernels(mdp, policy, alpha).hat_kernel, mdp.s_star, tol);
}

Vector grad_risk_cost(const ChainInstance& chain, double alpha, const SpectralSolution& sol) {
    const int n = chain.n_states;
    const int l = chain.param_dim;
    Vector g(l, 0.0);
    for (int x = 0; x < n; ++x) {
        const double px = sol.pi_check[x];
        for (int k = 0; k < l; ++k) g[k] += px * alpha * chain.cost_grad(x, k);
        for (int y = 0; y < n; ++y) {
            const double w = px * sol.twisted(x, y);
            if (w == 0.0) continue;
            const double* sc = chain.score_at(x, y);
            for (int k = 0; k < l; ++k) g[k] += w * sc[k];
        }
    }
    return g;
}

Vector grad_risk_cost(const ChainInstance& chain, double alpha) {
    return grad_risk_cost(chain, alpha, solve(chain, alpha));
}

Vector grad_risk_cost(const MdpModel& mdp, const SoftmaxPolicy& policy, double alpha) {
    const SpectralSolution sol = solve(mdp, policy, alpha);
    const int S = mdp.n_states;
    const int A = mdp.n_actions;
    Vector g(policy.param_dim(), 0.0);
    // Twisted state-action law: pi(s) * e^{alpha C(s,a)} mu(s,a) (P h)(s,a) / (lambda h(s)).
    for (int s = 0; s < S; ++s) {
        const Vector mu = policy.probs(s);
        const double denom = sol.lambda * sol.h[s];
        for (int a = 0; a < A; ++a) {
            const double* prow = mdp.p_row(s, a);
            double ph = 0.0;
            for (int s2 = 0; s2 < S; ++s2) ph += prow[s2] * sol.h[s2];
            const double w =
                sol.pi_check[s] * std::exp(alpha * mdp.cost(s, a)) * mu[a] * ph / denom;
            if (w == 0.0) continue;
            // Score of the softmax policy, expanded in place.
            double* block = g.data() + static_cast<std::size_t>(s) * A;
            for (int a2 = 0; a2 < A; ++a2) block[a2] -= w * mu[a2];
            block[a] += w;
        }
    }
    return g;
}

Vector fd_gradient(const ChainModel& model, const Vector& theta, double alpha, double step) {
    Vector g(model.param_dim, 0.0);
    for (int k = 0; k < model.param_dim; ++k) {
        Vector tp = theta, tm = theta;
        tp[k] += step;
        tm[k] -= step;
        const double lp = solve(model.at(tp), alpha).Lambda;
        const double lm = solve(model.at(tm), alpha).Lambda;
        g[k] = (lp - lm) / (2.0 * step);
    }
    return g;
}

Vector fd_gradient(const MdpModel& mdp, const SoftmaxPolicy& policy, double alpha, double step) {
    Vector g(policy.param_dim(), 0.0);
    for (int k = 0; k < policy.param_dim(); ++k) {
        SoftmaxPolicy pp = policy, pm = policy;
        pp.logits[k] += step;
        pm.logits[k] -= step;
        const double lp = solve(mdp, pp, alpha).Lambda;
        const double lm = solve(mdp, pm, alpha).Lambda;
        g[k] = (lp - lm) / (2.0 * step);
    }
    return g;
}

}  // namespace riskgrad
