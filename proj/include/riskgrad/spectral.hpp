#pragma once

// Exact oracle layer: Perron eigenpair of the exponentiated kernel, the
// risk-sensitive cost Lambda = ln(lambda), the relative value function h,
// the twisted kernel and its stationary law, and exact / finite-difference
// gradients of Lambda. Pure functions of immutable inputs.

#include "riskgrad/linalg.hpp"
#include "riskgrad/model.hpp"

namespace riskgrad {

struct SpectralSolution {
    double lambda = 0.0;    // Perron eigenvalue of the hat kernel
    double Lambda = 0.0;    // ln(lambda), log-cost per step
    Vector h;               // positive right eigenvector, h(x_star) = 1
    Matrix twisted;         // row-stochastic twisted kernel
    Vector pi_check;        // stationary law of the twisted kernel
    double residual = 0.0;  // max-norm multiplicative Poisson residual
};

// Entrywise hat kernel: entry (x,y) = e^{alpha C(x)} P(x,y).
Matrix hat_kernel(const Matrix& kernel, const Vector& cost, double alpha);

// Perron eigenpair by power iteration with per-step renormalization and a
// Collatz-Wielandt bracket as the convergence monitor. The eigenvector is
// normalized to h(x_star) = 1. Throws NoConvergence past max_iters.
struct PerronResult {
    double lambda;
    Vector h;
};
PerronResult perron(const Matrix& hat, int x_star, double tol = 1e-12,
                    long max_iters = 1000000);

// Stationary distribution of a stochastic matrix via transposed power
// iteration, normalized to sum 1.
Vector stationary_distribution(const Matrix& kernel, double tol = 1e-12,
                               long max_iters = 1000000);

SpectralSolution solve_hat(const Matrix& hat, int x_star, double tol = 1e-12);
SpectralSolution solve(const ChainInstance& chain, double alpha, double tol = 1e-12);
SpectralSolution solve(const MdpModel& mdp, const SoftmaxPolicy& policy, double alpha,
                       double tol = 1e-12);

// Exact gradient of Lambda in the stationary form under the twisted kernel:
// sum_x pi(x) alpha grad C(x) + sum_{x,y} pi(x) Ptw(x,y) L(x,y).
Vector grad_risk_cost(const ChainInstance& chain, double alpha);
Vector grad_risk_cost(const ChainInstance& chain, double alpha, const SpectralSolution& sol);

// MDP counterpart: the twisted state-action law weights the policy scores.
Vector grad_risk_cost(const MdpModel& mdp, const SoftmaxPolicy& policy, double alpha);

// Central finite differences of Lambda, the oracle used for gradient checks.
Vector fd_gradient(const ChainModel& model, const Vector& theta, double alpha,
                   double step = 1e-5);
Vector fd_gradient(const MdpModel& mdp, const SoftmaxPolicy& policy, double alpha,
                   double step = 1e-5);

}  // namespace riskgrad
