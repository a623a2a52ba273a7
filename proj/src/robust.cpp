#include "riskgrad/robust.hpp"

#include <cmath>

#include "riskgrad/errors.hpp"
#include "riskgrad/spectral.hpp"

namespace riskgrad {

double entropic_risk(const ChainInstance& chain, double alpha) {
    if (!(alpha > 0.0)) throw ValidationError("entropic_risk: alpha must be positive");
    return solve(chain, alpha).Lambda / alpha;
}

RiskLimits risk_limits(const ChainInstance& chain) {
    RiskLimits out;
    const Vector pi = stationary_distribution(chain.kernel);
    out.average_cost = dot(pi, chain.cost);
    out.max_cost = chain.cost[0];
    for (double c : chain.cost) out.max_cost = std::max(out.max_cost, c);
    return out;
}

double kl_divergence(const Vector& q, const Vector& p) {
    double kl = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
        if (q[i] == 0.0) continue;
        if (p[i] == 0.0) throw SupportMismatch("kl_divergence: q puts mass outside supp(p)");
        kl += q[i] * std::log(q[i] / p[i]);
    }
    return kl;
}

DvResult dv_scalar(const Vector& p, const Vector& phi, double alpha) {
    if (!(alpha > 0.0)) throw ValidationError("dv_scalar: alpha must be positive");
    // log-sum-exp over the support of p
    double mx = -1e300;
    for (std::size_t i = 0; i < p.size(); ++i)
        if (p[i] > 0.0) mx = std::max(mx, alpha * phi[i]);
    double z = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i)
        if (p[i] > 0.0) z += p[i] * std::exp(alpha * phi[i] - mx);
    DvResult out;
    out.lhs = (mx + std::log(z)) / alpha;
    out.q_star = Vector(p.size(), 0.0);
    for (std::size_t i = 0; i < p.size(); ++i)
        if (p[i] > 0.0) out.q_star[i] = p[i] * std::exp(alpha * phi[i] - mx) / z;
    return out;
}

double dv_objective(const Vector& p, const Vector& q, const Vector& phi, double alpha) {
    double ephi = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) ephi += q[i] * phi[i];
    return ephi - kl_divergence(q, p) / alpha;
}

double kl_lower_bound(const ChainInstance& chain, double alpha, const Matrix& q) {
    const int n = chain.n_states;
    for (int x = 0; x < n; ++x)
        for (int y = 0; y < n; ++y)
            if (q(x, y) > 0.0 && chain.kernel(x, y) == 0.0)
                throw SupportMismatch("kl_lower_bound: Q(" + std::to_string(x) + "," +
                                      std::to_string(y) + ") outside supp(P)");
    const DiagnosticsReport rep = validate_kernel(q, chain.x_star);
    if (!rep.irreducible) throw NotIrreducible("kl_lower_bound: Q is not irreducible");

    const Vector pi = stationary_distribution(q);
    double avg_cost = dot(pi, chain.cost);
    double kl = 0.0;
    for (int x = 0; x < n; ++x) {
        double row_kl = 0.0;
        for (int y = 0; y < n; ++y) {
            if (q(x, y) == 0.0) continue;
            row_kl += q(x, y) * std::log(q(x, y) / chain.kernel(x, y));
        }
        kl += pi[x] * row_kl;
    }
    return avg_cost - kl / alpha;
}

RiskPoint optimal_tilt(const ChainInstance& chain, double alpha) {
    const SpectralSolution sol = solve(chain, alpha);
    RiskPoint pt;
    pt.alpha = alpha;
    pt.e_alpha = sol.Lambda / alpha;
    pt.rho_at_beta = dot(sol.pi_check, chain.cost);
    double beta = 0.0;
    for (int x = 0; x < chain.n_states; ++x) {
        double row_kl = 0.0;
        for (int y = 0; y < chain.n_states; ++y) {
            const double t = sol.twisted(x, y);
            if (t == 0.0) continue;
            row_kl += t * std::log(t / chain.kernel(x, y));
        }
        beta += sol.pi_check[x] * row_kl;
    }
    pt.beta_alpha = beta;
    pt.identity_residual = std::abs(pt.e_alpha - (pt.rho_at_beta - pt.beta_alpha / alpha));
    return pt;
}

Matrix perturb_kernel(const Matrix& kernel, Rng& rng) {
    const int n = kernel.rows();
    Matrix q(n, n, 0.0);
    for (int x = 0; x < n; ++x) {
        double z = 0.0;
        Vector d(n, 0.0);
        for (int y = 0; y < n; ++y) {
            if (kernel(x, y) <= 0.0) continue;
            d[y] = -std::log(1.0 - rng.next_double());  // Exp(1) on the support
            z += d[y];
        }
        for (int y = 0; y < n; ++y) q(x, y) = 0.5 * kernel(x, y) + 0.5 * d[y] / z;
    }
    return q;
}

}  // namespace riskgrad
