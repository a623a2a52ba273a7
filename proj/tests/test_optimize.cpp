#include <doctest.h>

#include <cmath>

#include "riskgrad/errors.hpp"
#include "riskgrad/fixtures.hpp"
#include "riskgrad/optimize.hpp"
#include "riskgrad/spectral.hpp"
#include "riskgrad/trunc.hpp"

using namespace riskgrad;

namespace {

RunConfig small_eval_cfg(long steps) {
    RunConfig cfg;
    cfg.steps = steps;
    cfg.step = StepSchedule{0.05, 0.8, 10.0};
    cfg.trunc = TruncationSchedule::power(0.2);
    cfg.checkpoint_every = 1000;
    cfg.seed = 1;
    return cfg;
}

}  // namespace

TEST_CASE("policy_evaluate on the one-state chain stays at alpha c") {
    const ChainModel m = fixtures::single_state(0.6);
    RunConfig cfg = small_eval_cfg(500);
    cfg.lambda0 = 0.6;  // alpha c
    const Trace tr = policy_evaluate(m, {}, 1.0, cfg);
    for (const auto& r : tr.iterations) CHECK(r.lambda_tilde == doctest::Approx(0.6));
    CHECK(tr.final_lambda_tilde == doctest::Approx(0.6));
    CHECK(tr.trunc_activations == 0);
}

TEST_CASE("policy_evaluate fixed-M approaches the hard truncated cost") {
    const ChainModel m = fixtures::chain_a();
    RunConfig cfg = small_eval_cfg(60000);
    cfg.trunc = TruncationSchedule::fixed(4.0);
    const double target = lambda_trunc(m.at({}), 1.0, 4.0, TruncMode::Hard);
    const Trace tr = policy_evaluate(m, {}, 1.0, cfg);
    CHECK(std::abs(tr.final_lambda_tilde - target) < 0.08);
    CHECK(tr.trunc_activations > 0);
}

TEST_CASE("policy_evaluate is deterministic in the seed") {
    const ChainModel m = fixtures::chain_a();
    const RunConfig cfg = small_eval_cfg(2000);
    const Trace a = policy_evaluate(m, {}, 1.0, cfg);
    const Trace b = policy_evaluate(m, {}, 1.0, cfg);
    REQUIRE(a.iterations.size() == b.iterations.size());
    for (std::size_t i = 0; i < a.iterations.size(); ++i) {
        CHECK(a.iterations[i].lambda_tilde == b.iterations[i].lambda_tilde);
        CHECK(a.iterations[i].tau == b.iterations[i].tau);
    }
    RunConfig other = cfg;
    other.seed = 2;
    const Trace c = policy_evaluate(m, {}, 1.0, other);
    bool differs = false;
    for (std::size_t i = 0; i < a.iterations.size() && !differs; ++i)
        differs = a.iterations[i].tau != c.iterations[i].tau;
    CHECK(differs);
}

TEST_CASE("lambda_tilde never crosses its deterministic lower bound") {
    const ChainModel m = fixtures::chain_a();
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        RunConfig cfg = small_eval_cfg(20000);
        cfg.seed = seed;
        const Trace tr = policy_evaluate(m, {}, 1.0, cfg);
        for (const auto& r : tr.iterations)
            CHECK(r.lambda_tilde >= tr.lambda_lower_bound - 1e-12);
    }
}

TEST_CASE("train on a gradient-free instance reduces to evaluation") {
    const ChainModel m = fixtures::chain_a();  // no parameters at all
    RunConfig cfg = small_eval_cfg(5000);
    cfg.trunc = TruncationSchedule::fixed(16.0);
    const Trace tr = train(m, 1.0, cfg);
    CHECK(tr.final_theta.empty());
    for (const auto& r : tr.iterations) CHECK(r.update_norm_theta == 0.0);
    // the cost estimate still moves toward Lambda^(16)
    const double target = lambda_trunc(m.at({}), 1.0, 16.0, TruncMode::Smooth);
    CHECK(std::abs(tr.final_lambda_tilde - target) < 0.15);
}

TEST_CASE("train on the symmetric MDP keeps the exact gradient at zero") {
    const MdpModel m = fixtures::mdp_2x2_symmetric();
    RunConfig cfg;
    cfg.steps = 4000;
    cfg.step = StepSchedule{0.5, 0.8, 10.0};
    cfg.trunc = TruncationSchedule::fixed(16.0);
    cfg.checkpoint_every = 500;
    const Trace tr = train(m, 1.0, cfg);
    for (const auto& c : tr.checkpoints) CHECK(c.grad_norm_exact < 1e-8);
}

TEST_CASE("train moves chain A(theta) downhill") {
    const ChainModel m = fixtures::chain_a_theta();
    RunConfig cfg;
    cfg.steps = 30000;
    cfg.step = StepSchedule{3.0, 0.8, 10.0};
    cfg.trunc = TruncationSchedule::fixed(16.0);
    cfg.checkpoint_every = 5000;
    const Trace tr = train(m, 1.0, cfg);
    const double lam0 = tr.checkpoints.front().lambda_exact;
    const double lam1 = tr.checkpoints.back().lambda_exact;
    CHECK(lam1 < lam0 - 0.2);
    CHECK(tr.final_theta[0] > 1.0);
}

TEST_CASE("checkpoints carry the truncated cost when requested") {
    const ChainModel m = fixtures::chain_a_theta();
    RunConfig cfg;
    cfg.steps = 20000;
    cfg.step = StepSchedule{3.0, 0.8, 10.0};
    cfg.trunc = TruncationSchedule::fixed(16.0);
    cfg.checkpoint_every = 4000;
    cfg.checkpoint_lambda_trunc = true;
    const Trace tr = train(m, 1.0, cfg);
    REQUIRE(tr.checkpoints.size() >= 3);
    for (const auto& c : tr.checkpoints) {
        CHECK(std::isfinite(c.lambda_trunc));
        CHECK(c.lambda_trunc <= c.lambda_exact + 1e-10);
    }
    CHECK(tr.checkpoints.back().lambda_trunc < tr.checkpoints.front().lambda_trunc - 0.05);
}

TEST_CASE("projected updates respect the clamps on every iterate") {
    const ChainModel m = fixtures::chain_a_theta();
    RunConfig cfg;
    cfg.steps = 20000;
    cfg.step = StepSchedule{3.0, 0.8, 10.0};
    cfg.trunc = TruncationSchedule::fixed(16.0);
    cfg.theta_thresh = 0.05;
    cfg.lambda_thresh = 0.02;
    const Trace tr = train(m, 1.0, cfg);
    for (const auto& r : tr.iterations) {
        CHECK(r.update_norm_theta <= 0.05 + 1e-12);
        CHECK(r.update_norm_lambda <= 0.02 + 1e-12);
    }
}

TEST_CASE("constant-cost chain: exact cost pinned at alpha c throughout training") {
    // both mixture components share the kernel and a constant cost
    std::vector<fixtures::MixtureComponent> comps(2);
    comps[0] = {Matrix::from_rows({{0.4, 0.6}, {0.7, 0.3}}), {0.5, 0.5}};
    comps[1] = {Matrix::from_rows({{0.8, 0.2}, {0.1, 0.9}}), {0.5, 0.5}};
    const ChainModel m = fixtures::logit_mixture_chain(comps, 0);
    RunConfig cfg;
    cfg.steps = 8000;
    cfg.step = StepSchedule{0.5, 0.8, 10.0};
    cfg.trunc = TruncationSchedule::fixed(8.0);
    cfg.checkpoint_every = 1000;
    const Trace tr = train(m, 2.0, cfg);
    for (const auto& c : tr.checkpoints)
        CHECK(c.lambda_exact == doctest::Approx(2.0 * 0.5).epsilon(1e-10));
    CHECK(std::abs(tr.final_lambda_tilde - 1.0) < 0.05);
}

TEST_CASE("config validation") {
    RunConfig cfg = small_eval_cfg(100);
    SUBCASE("incompatible beta") {
        cfg.step.exponent = 0.6;  // 2 * 0.6 * 0.8 = 0.96 < 1
        cfg.trunc = TruncationSchedule::power(0.2);
        CHECK_THROWS_AS(policy_evaluate(fixtures::chain_a(), {}, 1.0, cfg), ConfigError);
    }
    SUBCASE("eta positive") {
        cfg.eta = 0.0;
        CHECK_THROWS_AS(cfg.validate(), ConfigError);
    }
    SUBCASE("theta dimension") {
        RunConfig c2 = small_eval_cfg(10);
        c2.theta0 = {0.0, 0.0};
        CHECK_THROWS_AS(train(fixtures::chain_a_theta(), 1.0, c2), ConfigError);
    }
}

TEST_CASE("diagnostics totals match the trace") {
    const ChainModel m = fixtures::chain_a();
    RunConfig cfg = small_eval_cfg(3000);
    cfg.trunc = TruncationSchedule::fixed(1.5);
    const Trace tr = policy_evaluate(m, {}, 1.0, cfg);
    const SummaryReport rep = diagnostics(tr);
    CHECK(rep.iterations == 3000);
    long long steps = 0;
    long active = 0;
    for (const auto& r : tr.iterations) {
        steps += r.tau;
        if (r.trunc_active) ++active;
    }
    CHECK(rep.total_env_steps == steps);
    CHECK(rep.trunc_activations == active);
    CHECK(rep.trunc_activation_fraction > 0.0);  // M = 1.5 binds often
    CHECK(rep.lower_bound_violations == 0);
    // cumulative t_m bookkeeping
    long long t = 0;
    for (const auto& r : tr.iterations) {
        CHECK(r.t_m == t);
        t += r.tau;
    }
}
