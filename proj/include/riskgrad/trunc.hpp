#pragma once

// Truncated cycle estimators: the raw cycle weight H, hard truncation,
// the smooth truncation G^(M) (five-term series in ln(H/M) past the knee),
// its derivative weight W^(M) (four terms), the gradient estimator F^(M),
// exact truncated expectations by excursion enumeration, and truncated
// fixed points Lambda^(M).
//
// All weight computations run in log space; the branch H > M is decided as
// ln H > ln M, so weights stay usable long after raw H overflows a double.

#include <cstdint>

#include "riskgrad/linalg.hpp"
#include "riskgrad/model.hpp"
#include "riskgrad/regen.hpp"
#include "riskgrad/rng.hpp"
#include "riskgrad/schedules.hpp"

namespace riskgrad {

enum class TruncMode { Hard, Smooth };

// ln H = sum_i (alpha costs[i]) - tau * Lambda for one cycle.
double cycle_log_weight(const Cycle& cycle, double alpha, double Lambda);

// H itself; +inf once ln H exceeds 700 (callers keep using the log).
double cycle_weight(const Cycle& cycle, double alpha, double Lambda);

double hard_trunc(double h, double m);
double hard_trunc_log(double log_h, double m);

// G^(M): H below the knee, M * sum_{i<=4} (1/i!) ln(H/M)^i above it.
// Continuous at H = M, strictly increasing, and min(H,M) <= G <= H.
double smooth_trunc(double h, double m);
double smooth_trunc_log(double log_h, double m);

// W^(M): same with the four-term series; 0 < W <= G, equality iff H <= M,
// and dG/dLambda along a cycle equals -tau * W.
double smooth_trunc_deriv_weight(double h, double m);
double smooth_trunc_deriv_weight_log(double log_h, double m);

// F^(M) = G^(M) * sum_i L_i + W^(M) * sum_i alpha * grad C_i, the estimator
// of the (unnormalized) gradient direction. Throws MissingScores when the
// cycle lacks per-step score data for a parameterized model.
Vector grad_estimate(const Cycle& cycle, double alpha, double Lambda, double m);

// Excursion transition system shared by the exact evaluators: edges carry the
// step probability and the realized step cost (per-action for MDPs).
struct ExcursionSystem {
    int n_states = 0;
    int x_star = 0;
    double c_upper = 0.0;
    // edges_from[s] lists (to, prob, cost)
    struct Edge {
        int to;
        double prob;
        double cost;
    };
    std::vector<std::vector<Edge>> edges_from;
};
ExcursionSystem excursion_system(const ChainInstance& chain);
ExcursionSystem excursion_system(const MdpModel& mdp, const SoftmaxPolicy& policy);

struct Estimate {
    double value = 0.0;
    double error_bound = 0.0;  // tail bound (enumerate) or standard error (MC)
};

// g^(M)(Lambda) = E[ truncated weight ] by exact excursion enumeration up to
// depth T, plus a certified bound on the truncated tail past T. Paths are
// deduplicated on (state, accumulated cost), which keeps the sweep polynomial
// for desk-scale cost structures. Throws DepthTooSmall when the state budget
// or tail control is exhausted.
Estimate g_trunc_enumerate(const ExcursionSystem& sys, double alpha, double Lambda, double m,
                           TruncMode mode, int depth);

// Monte Carlo counterpart: sample mean and standard error over n cycles.
Estimate g_trunc_montecarlo(const ChainInstance& chain, double alpha, double Lambda, double m,
                            TruncMode mode, long n, Rng& rng);

// Auto-depth enumeration: doubles the depth until the tail bound drops below
// tol (absolute).
double g_trunc_exact(const ExcursionSystem& sys, double alpha, double Lambda, double m,
                     TruncMode mode, double tol = 1e-12);

// Lambda^(M): the unique root of g^(M)(Lambda) = 1 by bisection on the
// strictly decreasing map. Upper bracket alpha*C_upper; lower bracket found
// by doubling steps (BracketFailure after 60 doublings).
double lambda_trunc(const ExcursionSystem& sys, double alpha, double m, TruncMode mode,
                    double tol = 1e-10);
double lambda_trunc(const ChainInstance& chain, double alpha, double m, TruncMode mode,
                    double tol = 1e-10);
double lambda_trunc(const MdpModel& mdp, const SoftmaxPolicy& policy, double alpha, double m,
                    TruncMode mode, double tol = 1e-10);

// Builds ladder rungs N_i as the smallest powers of two for which the worst
// gap Lambda_theta - Lambda_theta^(N_i) over a low-discrepancy theta grid
// drops below (i+1)^(-2). The grid stands in for a supremum over all theta.
struct LadderOptions {
    int grid_points = 64;
    double theta_low = -5.0;
    double theta_high = 5.0;
    TruncMode mode = TruncMode::Smooth;
    double max_rung = 1099511627776.0;  // 2^40, LadderExhausted past this
};
std::vector<double> build_ladder(const ChainModel& model, double alpha, int levels,
                                 const LadderOptions& opts = {});

}  // namespace riskgrad
