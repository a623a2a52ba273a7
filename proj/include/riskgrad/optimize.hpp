#pragma once

// Stochastic algorithms: policy evaluation by truncated cycle weights and the
// trajectory-based policy-gradient iteration, with optional element-wise
// projection of the updates and exact-oracle checkpointing.
//
// A single run is strictly sequential (the iteration is a Markov recursion);
// multiple runs may execute concurrently, each owning its rng stream and
// trace buffer while sharing the immutable model.

#include <cstdint>
#include <optional>

#include "riskgrad/model.hpp"
#include "riskgrad/schedules.hpp"

namespace riskgrad {

struct RunConfig {
    double eta = 1.0;
    std::optional<double> lambda0;  // default alpha * C_upper when absent
    Vector theta0;                  // defaults to zeros of the right dimension
    long steps = 200000;
    StepSchedule step;
    TruncationSchedule trunc;
    std::optional<double> theta_thresh;   // both present => projected updates
    std::optional<double> lambda_thresh;
    std::uint64_t seed = 1;
    long checkpoint_every = 500;
    bool checkpoint_lambda_trunc = false;
    long cycle_cap = 1000000;

    void validate() const;
};

struct IterationRecord {
    long m = 0;
    long long t_m = 0;  // cumulative environment steps before cycle m
    double gamma = 0.0;
    double trunc_level = 0.0;
    long tau = 0;
    double lambda_tilde = 0.0;  // estimate entering this cycle
    double update_norm_theta = 0.0;
    double update_norm_lambda = 0.0;
    bool trunc_active = false;  // H_m > M_m
};

struct CheckpointRecord {
    long m = 0;
    double lambda_exact = 0.0;
    double grad_norm_exact = 0.0;
    double lambda_trunc = 0.0;  // NaN when not requested
    double lambda_tilde = 0.0;
    Vector theta;
};

struct Trace {
    std::vector<IterationRecord> iterations;
    std::vector<CheckpointRecord> checkpoints;
    double lambda_lower_bound = 0.0;  // min(lambda0, alpha*C_lower - eta*gamma_max)
    long lower_bound_margin_checks = 0;
    long upper_warning_iters = 0;  // iterations with lambda_tilde >= 2*alpha*C_upper + 2
    long trunc_activations = 0;
    long long total_env_steps = 0;
    long max_tau = 0;
    double min_lambda_tilde = 0.0;
    double max_lambda_tilde = 0.0;
    double final_lambda_tilde = 0.0;
    Vector final_theta;
    double wall_seconds = 0.0;
};

// Policy evaluation: Lambda_{m+1} = Lambda_m + gamma_m (min(H_m, M_m) - 1)
// with H_m the weight of the m-th sampled cycle at the current estimate.
// Fixed truncation converges toward Lambda^(hard,M); an increasing schedule
// (power or ladder) targets Lambda itself. theta stays fixed.
Trace policy_evaluate(const ChainModel& model, const Vector& theta, double alpha,
                      const RunConfig& cfg);
Trace policy_evaluate(const MdpModel& mdp, const Vector& logits, double alpha,
                      const RunConfig& cfg);

// Trajectory-based gradient iteration:
//   theta_{m+1}  = theta_m - gamma_m F_m(theta_m, Lambda_m)
//   Lambda_{m+1} = Lambda_m + eta gamma_m (G_m(theta_m, Lambda_m) - 1)
// with each update clamped element-wise to [-thresh, thresh] when thresholds
// are configured. Checkpoints record the exact cost and gradient norm.
// Throws LowerBoundViolated if the deterministic lower bound on the cost
// iterate ever breaks (that would be an implementation bug, not noise).
Trace train(const ChainModel& model, double alpha, const RunConfig& cfg);
Trace train(const MdpModel& mdp, double alpha, const RunConfig& cfg);

struct SummaryReport {
    double initial_lambda_exact = 0.0;
    double final_lambda_exact = 0.0;
    double final_grad_norm_exact = 0.0;
    double min_lambda_tilde = 0.0;
    double max_lambda_tilde = 0.0;
    long trunc_activations = 0;
    double trunc_activation_fraction = 0.0;
    long lower_bound_violations = 0;  // always 0 for a completed run
    long upper_warning_iters = 0;
    long iterations = 0;
    long long total_env_steps = 0;
    double mean_tau = 0.0;
    long max_tau = 0;
    double wall_seconds = 0.0;
};
SummaryReport diagnostics(const Trace& trace);

}  // namespace riskgrad
