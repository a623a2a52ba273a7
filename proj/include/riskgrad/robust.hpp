#pragma once

// Entropic and coherent risk machinery: the entropic risk e(alpha) =
// Lambda(alpha)/alpha, its limits (average and maximum cost), the scalar
// Donsker-Varadhan variational identity, KL-ball lower bounds over perturbed
// kernels, and the twisted-kernel tilt that attains the variational supremum.

#include "riskgrad/linalg.hpp"
#include "riskgrad/model.hpp"
#include "riskgrad/rng.hpp"

namespace riskgrad {

struct RiskPoint {
    double alpha = 0.0;
    double e_alpha = 0.0;       // Lambda(alpha) / alpha
    double beta_alpha = 0.0;    // E_pi_tw [ KL(Ptw(x,.) || P(x,.)) ]
    double rho_at_beta = 0.0;   // E_pi_tw [ C ]
    double identity_residual = 0.0;  // | e - (rho - beta/alpha) |
};

double entropic_risk(const ChainInstance& chain, double alpha);

struct RiskLimits {
    double average_cost = 0.0;  // pi_P . C, the alpha -> 0 limit
    double max_cost = 0.0;      // the alpha -> inf limit
};
RiskLimits risk_limits(const ChainInstance& chain);

// Scalar Donsker-Varadhan: lhs = (1/alpha) ln E_p[e^{alpha phi}], together
// with the maximizing tilt q*(x) proportional to p(x) e^{alpha phi(x)}.
struct DvResult {
    double lhs = 0.0;
    Vector q_star;
};
DvResult dv_scalar(const Vector& p, const Vector& phi, double alpha);

// Objective value E_q[phi] - (1/alpha) KL(q||p); SupportMismatch if q has
// mass where p has none. Never exceeds dv_scalar(...).lhs.
double dv_objective(const Vector& p, const Vector& q, const Vector& phi, double alpha);

// KL divergence of one distribution row from another (natural log).
double kl_divergence(const Vector& q, const Vector& p);

// E_{pi_Q}[C] - (1/alpha) E_{pi_Q}[KL(Q(x,.)||P(x,.))]: a lower bound on
// e(alpha) for every irreducible Q absolutely continuous w.r.t. the chain
// kernel. Throws SupportMismatch / NotIrreducible on inadmissible Q.
double kl_lower_bound(const ChainInstance& chain, double alpha, const Matrix& q);

// The twisted kernel attains the variational supremum; returns the attained
// frontier point and enforces the identity e = rho - beta/alpha.
RiskPoint optimal_tilt(const ChainInstance& chain, double alpha);

// Support-preserving random perturbation of the kernel for property sweeps:
// Dirichlet-style row resampling on the support, mixed half-and-half with the
// original rows to keep irreducibility.
Matrix perturb_kernel(const Matrix& kernel, Rng& rng);

}  // namespace riskgrad
