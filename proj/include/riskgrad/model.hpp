#pragma once

// Parameterized finite Markov chains and MDPs with likelihood-ratio scores.
//
// A chain model maps a parameter vector theta to a row-stochastic kernel
// P_theta, a one-step state cost C_theta, the score table L_theta with
// grad P = P * L on the support, and the cost gradient. All model objects are
// immutable after construction and safe to share across concurrent runs.

#include <functional>
#include <vector>

#include "riskgrad/linalg.hpp"

namespace riskgrad {

// Concrete kernel/cost/score data at one parameter point.
struct ChainInstance {
    int n_states = 0;
    int x_star = 0;
    int param_dim = 0;
    Matrix kernel;     // n x n, row stochastic
    Vector cost;       // n
    Matrix score;      // (n*n) x l, row x*n+y; meaningful only on the support
    Matrix cost_grad;  // n x l
    double c_lower = 0.0;
    double c_upper = 0.0;

    const double* score_at(int x, int y) const { return score.row(x * n_states + y); }
};

struct ChainModel {
    int n_states = 0;
    int x_star = 0;
    int param_dim = 0;
    double c_lower = 0.0;
    double c_upper = 0.0;
    std::function<Matrix(const Vector&)> kernel;
    std::function<Vector(const Vector&)> cost;
    std::function<Matrix(const Vector&)> score;      // (n*n) x l
    std::function<Matrix(const Vector&)> cost_grad;  // n x l

    ChainInstance at(const Vector& theta) const;
};

struct MdpModel {
    int n_states = 0;
    int n_actions = 0;
    int s_star = 0;
    Matrix transition;  // (s*A + a) row over s'; row stochastic
    Matrix cost;        // n_states x n_actions
    double c_lower = 0.0;
    double c_upper = 0.0;

    double p(int s, int a, int s2) const { return transition(s * n_actions + a, s2); }
    const double* p_row(int s, int a) const { return transition.row(s * n_actions + a); }

    // Fills the cost bounds from the cost array and checks stochasticity.
    void finalize();
};

// Tabular softmax policy over an MDP's actions; logits are flattened
// row-major by state, so the parameter dimension is n_states * n_actions.
struct SoftmaxPolicy {
    int n_states = 0;
    int n_actions = 0;
    Vector logits;  // n_states * n_actions

    SoftmaxPolicy() = default;
    SoftmaxPolicy(int s, int a) : n_states(s), n_actions(a), logits(s * a, 0.0) {}

    int param_dim() const { return n_states * n_actions; }
    // Action probabilities at state s (strictly positive, sums to 1).
    Vector probs(int s) const;
};

// Score of the softmax policy: component (s, a') of grad ln mu(s, a) equals
// 1{a'=a} - mu(s,a'); components for other states vanish.
Vector policy_score(const SoftmaxPolicy& policy, int s, int a);

// Structural validation against the standing assumptions, at one theta.
struct DiagnosticsReport {
    double row_sum_residual = 0.0;
    bool irreducible = false;
    bool aperiodic = false;
    bool cost_in_bounds = true;  // realized costs inside [c_lower, c_upper]
    double score_residual = 0.0;  // max over support of |fd grad P - P*L|
    bool ok() const { return irreducible && aperiodic && cost_in_bounds; }
};

// Throws RowSumViolation if any kernel row deviates from 1 by more than 1e-9.
// Irreducibility / periodicity are reported as flags, not errors.
DiagnosticsReport validate_chain(const ChainModel& model, const Vector& theta);
DiagnosticsReport validate_kernel(const Matrix& kernel, int x_star);

// State kernel P_theta(s,s') = sum_a mu(s,a) P(s,a,s') and its exponentiated
// counterpart with per-action costs folded into the tilt:
// Phat(s,s') = sum_a e^{alpha C(s,a)} mu(s,a) P(s,a,s').
struct InducedKernels {
    Matrix state_kernel;
    Matrix hat_kernel;
};
InducedKernels induced_kernels(const MdpModel& mdp, const SoftmaxPolicy& policy, double alpha);

}  // namespace riskgrad
