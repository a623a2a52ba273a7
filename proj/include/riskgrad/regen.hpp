#pragma once

// Regeneration-cycle machinery: exact evaluation of the cycle expectation
// g(theta, Lambda) and its Lambda-derivative through first-passage linear
// systems, the relative value function by the same route, and the seeded
// cycle sampler behind every stochastic algorithm.

#include <cstdint>

#include "riskgrad/linalg.hpp"
#include "riskgrad/model.hpp"
#include "riskgrad/rng.hpp"

namespace riskgrad {

// One excursion from the recurrent state x* until the first return.
// states[0] = x*; the state after states[tau-1] is x* again (implicit).
struct Cycle {
    std::vector<int> states;
    std::vector<int> actions;    // empty for chain runs
    std::vector<double> costs;   // realized per-step costs, before alpha
    Matrix scores;               // tau x l per-step score vectors
    Matrix cost_grads;           // tau x l per-step cost gradients (chains)
    long tau = 0;

    void clear() {
        states.clear();
        actions.clear();
        costs.clear();
        scores = Matrix();
        cost_grads = Matrix();
        tau = 0;
    }
};

struct GValue {
    double value = 0.0;
    bool divergent = false;
};

// g(Lambda) = E_{x*}[ exp(sum_i (alpha C - Lambda)) over one cycle ],
// evaluated exactly: with A = e^{-Lambda} * hat restricted off x*, the value
// is the (I - B)^{-1} first-passage sum. Divergent when the restricted
// spectral radius reaches 1 (within a 1e-10 guard).
GValue g_exact_hat(const Matrix& hat, int x_star, double Lambda);
GValue g_exact(const ChainInstance& chain, double alpha, double Lambda);
GValue g_exact(const MdpModel& mdp, const SoftmaxPolicy& policy, double alpha, double Lambda);

// dg/dLambda at a Lambda where g is finite; strictly negative.
double dg_dLambda_exact_hat(const Matrix& hat, int x_star, double Lambda);
double dg_dLambda_exact(const ChainInstance& chain, double alpha, double Lambda);

// h(x) = E_x[ exp(sum (alpha C - Lambda_theta)) until the first visit to x* ].
// Evaluated at Lambda_theta itself; if the radius guard trips there from
// rounding, the solve retries at Lambda_theta + 1e-9 and flags the shift.
struct FirstPassageResult {
    Vector h;
    double lambda_used = 0.0;
    bool shifted = false;
};
FirstPassageResult h_via_first_passage(const Matrix& hat, int x_star, double Lambda_theta);

// Simulates one cycle from x* under the chain kernel. Consumes exactly tau
// uniform draws (one per step). Throws CycleCapExceeded past cap.
Cycle sample_cycle(const ChainInstance& chain, Rng& rng, long cap = 1000000);
void sample_cycle(const ChainInstance& chain, Rng& rng, long cap, Cycle& out);

// MDP version: one draw for the action, one for the transition, per step.
// Scores are the softmax policy scores at the realized (state, action);
// cost gradients are zero (costs do not depend on theta).
Cycle sample_cycle(const MdpModel& mdp, const SoftmaxPolicy& policy, Rng& rng,
                   long cap = 1000000);
void sample_cycle(const MdpModel& mdp, const SoftmaxPolicy& policy, Rng& rng, long cap,
                  Cycle& out);

}  // namespace riskgrad
