#include "riskgrad/optimize.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <memory>
#include <string>

#include "riskgrad/errors.hpp"
#include "riskgrad/regen.hpp"
#include "riskgrad/rng.hpp"
#include "riskgrad/spectral.hpp"
#include "riskgrad/trunc.hpp"

namespace riskgrad {

namespace {

double clamp_to(double x, double a) { return std::min(a, std::max(-a, x)); }

double wall_now() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

constexpr double kBoundSlack = 1e-12;

// Everything train() needs from a model, so chains and MDPs share one loop.
struct Target {
    int param_dim = 0;
    double c_lower = 0.0;
    double c_upper = 0.0;
    std::function<void(const Vector&, Rng&, long, Cycle&)> sample;
    std::function<double(const Vector&)> exact_lambda;
    std::function<double(const Vector&)> exact_grad_norm;
    std::function<double(const Vector&, double)> lambda_trunc_at;  // (theta, M)
};

Target chain_target(const ChainModel& model, double alpha) {
    Target t;
    t.param_dim = model.param_dim;
    t.c_lower = model.c_lower;
    t.c_upper = model.c_upper;
    struct Cache {
        bool ready = false;
        Vector theta;
        ChainInstance inst;
    };
    auto cache = std::make_shared<Cache>();
    auto instance_at = [cache, &model](const Vector& theta) -> const ChainInstance& {
        if (!cache->ready || cache->theta != theta) {
            cache->inst = model.at(theta);
            cache->theta = theta;
            cache->ready = true;
        }
        return cache->inst;
    };
    t.sample = [instance_at](const Vector& theta, Rng& rng, long cap, Cycle& out) {
        sample_cycle(instance_at(theta), rng, cap, out);
    };
    t.exact_lambda = [instance_at, alpha](const Vector& theta) {
        return solve(instance_at(theta), alpha).Lambda;
    };
    t.exact_grad_norm = [instance_at, alpha](const Vector& theta) {
        return norm2(grad_risk_cost(instance_at(theta), alpha));
    };
    t.lambda_trunc_at = [instance_at, alpha](const Vector& theta, double m) {
        return lambda_trunc(instance_at(theta), alpha, m, TruncMode::Smooth);
    };
    return t;
}

Target mdp_target(const MdpModel& mdp, double alpha) {
    Target t;
    t.param_dim = mdp.n_states * mdp.n_actions;
    t.c_lower = mdp.c_lower;
    t.c_upper = mdp.c_upper;
    auto as_policy = [&mdp](const Vector& theta) {
        SoftmaxPolicy p(mdp.n_states, mdp.n_actions);
        p.logits = theta;
        return p;
    };
    t.sample = [&mdp, as_policy](const Vector& theta, Rng& rng, long cap, Cycle& out) {
        sample_cycle(mdp, as_policy(theta), rng, cap, out);
    };
    t.exact_lambda = [&mdp, as_policy, alpha](const Vector& theta) {
        return solve(mdp, as_policy(theta), alpha).Lambda;
    };
    t.exact_grad_norm = [&mdp, as_policy, alpha](const Vector& theta) {
        return norm2(grad_risk_cost(mdp, as_policy(theta), alpha));
    };
    t.lambda_trunc_at = [&mdp, as_policy, alpha](const Vector& theta, double m) {
        return lambda_trunc(mdp, as_policy(theta), alpha, m, TruncMode::Smooth);
    };
    return t;
}

void checkpoint(Trace& trace, const Target& target, const RunConfig& cfg, long m,
                const Vector& theta, double lambda_tilde, double trunc_level) {
    CheckpointRecord rec;
    rec.m = m;
    rec.lambda_exact = target.exact_lambda(theta);
    rec.grad_norm_exact = target.exact_grad_norm(theta);
    rec.lambda_trunc = cfg.checkpoint_lambda_trunc
                           ? target.lambda_trunc_at(theta, trunc_level)
                           : std::numeric_limits<double>::quiet_NaN();
    rec.lambda_tilde = lambda_tilde;
    rec.theta = theta;
    trace.checkpoints.push_back(std::move(rec));
}

// Shared iteration skeleton. `policy_gradient` switches between evaluation
// (hard-truncated cost update only) and the full two-component update.
Trace run_loop(const Target& target, double alpha, const RunConfig& cfg, Vector theta,
               bool policy_gradient) {
    cfg.validate();
    if (static_cast<int>(theta.size()) != target.param_dim)
        throw ConfigError("theta0: expected dimension " + std::to_string(target.param_dim));
    if (cfg.trunc.increasing() && !cfg.step.compatible_with(cfg.trunc.beta))
        throw ConfigError("step/truncation: 2a(1-beta) > 1 is required for increasing "
                          "truncation schedules");

    const double started = wall_now();
    const double eta = policy_gradient ? cfg.eta : 1.0;
    const double lambda0 = cfg.lambda0.value_or(alpha * target.c_upper);
    const double lower_bound =
        std::min(lambda0, alpha * target.c_lower - eta * cfg.step.gamma_max());
    const double upper_warn = 2.0 * alpha * target.c_upper + 2.0;

    Trace trace;
    trace.lambda_lower_bound = lower_bound;
    trace.iterations.reserve(static_cast<std::size_t>(cfg.steps));
    trace.min_lambda_tilde = trace.max_lambda_tilde = lambda0;

    Rng rng(cfg.seed);
    Cycle cycle;
    double lambda_tilde = lambda0;
    long long t_m = 0;

    checkpoint(trace, target, cfg, 0, theta, lambda_tilde, cfg.trunc.value(cfg.step.gamma(0)));

    for (long m = 0; m < cfg.steps; ++m) {
        const double gamma = cfg.step.gamma(m);
        const double level = cfg.trunc.value(gamma);
        target.sample(theta, rng, cfg.cycle_cap, cycle);

        const double log_h = cycle_log_weight(cycle, alpha, lambda_tilde);
        const bool active = log_h > std::log(level);

        double d_theta_norm = 0.0;
        double d_lambda;
        if (policy_gradient) {
            const Vector f = grad_estimate(cycle, alpha, lambda_tilde, level);
            for (int k = 0; k < target.param_dim; ++k) {
                double d = -gamma * f[k];
                if (cfg.theta_thresh) d = clamp_to(d, *cfg.theta_thresh);
                theta[k] += d;
                d_theta_norm += d * d;
            }
            d_theta_norm = std::sqrt(d_theta_norm);
            d_lambda = eta * gamma * (smooth_trunc_log(log_h, level) - 1.0);
            if (cfg.lambda_thresh) d_lambda = clamp_to(d_lambda, *cfg.lambda_thresh);
        } else {
            d_lambda = gamma * (hard_trunc_log(log_h, level) - 1.0);
            if (cfg.lambda_thresh) d_lambda = clamp_to(d_lambda, *cfg.lambda_thresh);
        }

        IterationRecord rec;
        rec.m = m;
        rec.t_m = t_m;
        rec.gamma = gamma;
        rec.trunc_level = level;
        rec.tau = cycle.tau;
        rec.lambda_tilde = lambda_tilde;
        rec.update_norm_theta = d_theta_norm;
        rec.update_norm_lambda = std::abs(d_lambda);
        rec.trunc_active = active;
        trace.iterations.push_back(rec);

        lambda_tilde += d_lambda;
        t_m += cycle.tau;
        trace.max_tau = std::max(trace.max_tau, cycle.tau);
        if (active) ++trace.trunc_activations;
        if (lambda_tilde >= upper_warn) ++trace.upper_warning_iters;
        trace.min_lambda_tilde = std::min(trace.min_lambda_tilde, lambda_tilde);
        trace.max_lambda_tilde = std::max(trace.max_lambda_tilde, lambda_tilde);

        ++trace.lower_bound_margin_checks;
        if (lambda_tilde < lower_bound - kBoundSlack)
            throw LowerBoundViolated(
                "lambda_tilde fell below its deterministic lower bound at iteration " +
                std::to_string(m));

        if ((m + 1) % cfg.checkpoint_every == 0 && m + 1 < cfg.steps)
            checkpoint(trace, target, cfg, m + 1, theta, lambda_tilde,
                       cfg.trunc.value(cfg.step.gamma(m + 1)));
    }

    checkpoint(trace, target, cfg, cfg.steps, theta, lambda_tilde,
               cfg.trunc.value(cfg.step.gamma(cfg.steps - 1)));
    trace.total_env_steps = t_m;
    trace.final_lambda_tilde = lambda_tilde;
    trace.final_theta = std::move(theta);
    trace.wall_seconds = wall_now() - started;
    return trace;
}

}  // namespace

void RunConfig::validate() const {
    step.validate();
    trunc.validate();
    if (!(eta > 0.0)) throw ConfigError("eta: must be positive");
    if (steps < 1) throw ConfigError("steps: must be >= 1");
    if (checkpoint_every < 1) throw ConfigError("checkpoint_every: must be >= 1");
    if (cycle_cap < 1) throw ConfigError("cycle_cap: must be >= 1");
    if (theta_thresh && !(*theta_thresh > 0.0))
        throw ConfigError("theta_thresh: must be positive when present");
    if (lambda_thresh && !(*lambda_thresh > 0.0))
        throw ConfigError("lambda_thresh: must be positive when present");
}

Trace policy_evaluate(const ChainModel& model, const Vector& theta, double alpha,
                      const RunConfig& cfg) {
    return run_loop(chain_target(model, alpha), alpha, cfg, theta, false);
}

Trace policy_evaluate(const MdpModel& mdp, const Vector& logits, double alpha,
                      const RunConfig& cfg) {
    return run_loop(mdp_target(mdp, alpha), alpha, cfg, logits, false);
}

Trace train(const ChainModel& model, double alpha, const RunConfig& cfg) {
    Vector theta = cfg.theta0.empty() ? Vector(model.param_dim, 0.0) : cfg.theta0;
    return run_loop(chain_target(model, alpha), alpha, cfg, std::move(theta), true);
}

Trace train(const MdpModel& mdp, double alpha, const RunConfig& cfg) {
    const int dim = mdp.n_states * mdp.n_actions;
    Vector theta = cfg.theta0.empty() ? Vector(dim, 0.0) : cfg.theta0;
    return run_loop(mdp_target(mdp, alpha), alpha, cfg, std::move(theta), true);
}

SummaryReport diagnostics(const Trace& trace) {
    SummaryReport rep;
    rep.iterations = static_cast<long>(trace.iterations.size());
    if (!trace.checkpoints.empty()) {
        rep.initial_lambda_exact = trace.checkpoints.front().lambda_exact;
        rep.final_lambda_exact = trace.checkpoints.back().lambda_exact;
        rep.final_grad_norm_exact = trace.checkpoints.back().grad_norm_exact;
    }
    rep.min_lambda_tilde = trace.min_lambda_tilde;
    rep.max_lambda_tilde = trace.max_lambda_tilde;
    rep.trunc_activations = trace.trunc_activations;
    rep.trunc_activation_fraction =
        rep.iterations > 0 ? static_cast<double>(trace.trunc_activations) / rep.iterations
                           : 0.0;
    rep.lower_bound_violations = 0;  // a violation aborts the run before this point
    rep.upper_warning_iters = trace.upper_warning_iters;
    rep.total_env_steps = trace.total_env_steps;
    rep.mean_tau = rep.iterations > 0
                       ? static_cast<double>(trace.total_env_steps) / rep.iterations
                       : 0.0;
    rep.max_tau = trace.max_tau;
    rep.wall_seconds = trace.wall_seconds;
    return rep;
}

}  // namespace riskgrad
