#include <doctest.h>

#include <cmath>

#include "riskgrad/errors.hpp"
#include "riskgrad/fixtures.hpp"
#include "riskgrad/model.hpp"
#include "riskgrad/rng.hpp"

using namespace riskgrad;

TEST_CASE("validate_chain: one-state identity chain") {
    const ChainModel m = fixtures::single_state(0.7);
    const DiagnosticsReport rep = validate_chain(m, {});
    CHECK(rep.irreducible);
    CHECK(rep.aperiodic);
    CHECK(rep.row_sum_residual == 0.0);
    CHECK(rep.score_residual == 0.0);
}

TEST_CASE("validate_chain: positive two-state chain is primitive") {
    const DiagnosticsReport rep = validate_chain(fixtures::chain_a(), {});
    CHECK(rep.irreducible);
    CHECK(rep.aperiodic);
}

TEST_CASE("validate_chain: swap chain is periodic") {
    const ChainModel m =
        fixtures::fixed_chain(Matrix::from_rows({{0.0, 1.0}, {1.0, 0.0}}), {0.0, 1.0}, 0);
    const DiagnosticsReport rep = validate_chain(m, {});
    CHECK(rep.irreducible);
    CHECK_FALSE(rep.aperiodic);
}

TEST_CASE("validate_chain: bad row sums throw with the row index") {
    const ChainModel m =
        fixtures::fixed_chain(Matrix::from_rows({{0.5, 0.5}, {0.6, 0.6}}), {0.0, 1.0}, 0);
    CHECK_THROWS_AS(validate_chain(m, {}), RowSumViolation);
    try {
        validate_chain(m, {});
    } catch (const RowSumViolation& e) {
        CHECK(std::string(e.what()).find("row 1") != std::string::npos);
    }
}

TEST_CASE("validate_chain: disconnected support flagged, not fatal") {
    const ChainModel m = fixtures::fixed_chain(
        Matrix::from_rows({{1.0, 0.0}, {0.0, 1.0}}), {0.0, 1.0}, 0);
    const DiagnosticsReport rep = validate_chain(m, {});
    CHECK_FALSE(rep.irreducible);
}

TEST_CASE("score consistency against finite differences on the support") {
    Rng rng(11);
    SUBCASE("chain-a-theta") {
        const ChainModel m = fixtures::chain_a_theta();
        for (int rep = 0; rep < 5; ++rep) {
            const Vector theta{4.0 * rng.next_double() - 2.0};
            const DiagnosticsReport d = validate_chain(m, theta);
            CHECK(d.score_residual < 1e-5);
        }
    }
    SUBCASE("logit-mix") {
        const ChainModel m = fixtures::logit_mix3();
        for (int rep = 0; rep < 5; ++rep) {
            Vector theta(3);
            for (auto& t : theta) t = 4.0 * rng.next_double() - 2.0;
            const DiagnosticsReport d = validate_chain(m, theta);
            CHECK(d.score_residual < 1e-5);
        }
    }
}

TEST_CASE("declared cost bounds contain the realized costs") {
    const ChainModel m = fixtures::logit_mix3();
    Rng rng(31);
    for (int rep = 0; rep < 8; ++rep) {
        Vector theta(3);
        for (auto& t : theta) t = 10.0 * rng.next_double() - 5.0;
        const DiagnosticsReport d = validate_chain(m, theta);
        CHECK(d.cost_in_bounds);
        const Vector c = m.cost(theta);
        for (double v : c) {
            CHECK(v >= m.c_lower - 1e-12);
            CHECK(v <= m.c_upper + 1e-12);
        }
    }
}

TEST_CASE("mixture cost gradient matches finite differences") {
    const ChainModel m = fixtures::logit_mix3();
    const Vector theta{0.3, -0.4, 0.1};
    const Matrix cg = m.cost_grad(theta);
    const double step = 1e-6;
    for (int k = 0; k < 3; ++k) {
        Vector tp = theta, tm = theta;
        tp[k] += step;
        tm[k] -= step;
        const Vector cp = m.cost(tp);
        const Vector cm = m.cost(tm);
        for (int x = 0; x < 3; ++x) {
            const double fd = (cp[x] - cm[x]) / (2.0 * step);
            CHECK(cg(x, k) == doctest::Approx(fd).epsilon(1e-5));
        }
    }
}

TEST_CASE("softmax policy: probabilities positive, rows sum to one") {
    SoftmaxPolicy p(2, 3);
    p.logits = {0.5, -1.0, 2.0, 0.0, 0.0, 0.0};
    for (int s = 0; s < 2; ++s) {
        const Vector mu = p.probs(s);
        double sum = 0.0;
        for (double v : mu) {
            CHECK(v > 0.0);
            sum += v;
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("policy_score closed forms") {
    SUBCASE("uniform two-action logits") {
        SoftmaxPolicy p(2, 2);
        const Vector g = policy_score(p, 0, 0);
        CHECK(g[0] == doctest::Approx(0.5));
        CHECK(g[1] == doctest::Approx(-0.5));
        CHECK(g[2] == 0.0);
        CHECK(g[3] == 0.0);
    }
    SUBCASE("logits (ln 3, 0)") {
        SoftmaxPolicy p(1, 2);
        p.logits = {std::log(3.0), 0.0};
        const Vector mu = p.probs(0);
        CHECK(mu[0] == doctest::Approx(0.75).epsilon(1e-12));
        const Vector g = policy_score(p, 0, 1);
        CHECK(g[0] == doctest::Approx(-0.75).epsilon(1e-12));
        CHECK(g[1] == doctest::Approx(0.75).epsilon(1e-12));
    }
    SUBCASE("mean score vanishes for random logits") {
        SoftmaxPolicy p(2, 3);
        Rng rng(5);
        for (auto& v : p.logits) v = 3.0 * rng.next_double() - 1.5;
        for (int s = 0; s < 2; ++s) {
            const Vector mu = p.probs(s);
            Vector mean(p.param_dim(), 0.0);
            for (int a = 0; a < 3; ++a) {
                const Vector g = policy_score(p, s, a);
                for (int k = 0; k < p.param_dim(); ++k) mean[k] += mu[a] * g[k];
            }
            for (double v : mean) CHECK(std::abs(v) < 1e-14);
        }
    }
    SUBCASE("index out of range") {
        SoftmaxPolicy p(2, 2);
        CHECK_THROWS_AS(policy_score(p, 2, 0), ValidationError);
    }
}

TEST_CASE("induced_kernels") {
    SUBCASE("single action reduces to the plain kernel") {
        MdpModel m;
        m.n_states = 2;
        m.n_actions = 1;
        m.s_star = 0;
        m.transition = Matrix::from_rows({{0.3, 0.7}, {0.6, 0.4}});
        m.cost = Matrix::from_rows({{0.5}, {1.0}});
        m.finalize();
        SoftmaxPolicy p(2, 1);
        const auto ik = induced_kernels(m, p, 1.0);
        CHECK(ik.state_kernel(0, 1) == doctest::Approx(0.7));
        CHECK(ik.hat_kernel(0, 1) == doctest::Approx(std::exp(0.5) * 0.7));
        CHECK(ik.hat_kernel(1, 0) == doctest::Approx(std::exp(1.0) * 0.6));
    }
    SUBCASE("two identical actions match the single-action case") {
        MdpModel m;
        m.n_states = 2;
        m.n_actions = 2;
        m.s_star = 0;
        m.transition = Matrix::from_rows(
            {{0.3, 0.7}, {0.3, 0.7}, {0.6, 0.4}, {0.6, 0.4}});
        m.cost = Matrix::from_rows({{0.5, 0.5}, {1.0, 1.0}});
        m.finalize();
        SoftmaxPolicy p(2, 2);
        const auto ik = induced_kernels(m, p, 1.3);
        CHECK(ik.state_kernel(0, 1) == doctest::Approx(0.7).epsilon(1e-14));
        CHECK(ik.hat_kernel(1, 0) == doctest::Approx(std::exp(1.3) * 0.6).epsilon(1e-14));
    }
    SUBCASE("hand-expanded 2x2 sum with distinct costs") {
        const MdpModel m = fixtures::mdp_2x2();
        SoftmaxPolicy p(2, 2);
        p.logits = {0.4, -0.1, 0.0, 0.9};
        const auto ik = induced_kernels(m, p, 0.7);
        for (int s = 0; s < 2; ++s) {
            const Vector mu = p.probs(s);
            for (int s2 = 0; s2 < 2; ++s2) {
                const double plain = mu[0] * m.p(s, 0, s2) + mu[1] * m.p(s, 1, s2);
                const double hat = mu[0] * std::exp(0.7 * m.cost(s, 0)) * m.p(s, 0, s2) +
                                   mu[1] * std::exp(0.7 * m.cost(s, 1)) * m.p(s, 1, s2);
                CHECK(ik.state_kernel(s, s2) == doctest::Approx(plain).epsilon(1e-14));
                CHECK(ik.hat_kernel(s, s2) == doctest::Approx(hat).epsilon(1e-14));
            }
        }
    }
    SUBCASE("zero costs collapse hat onto the state kernel") {
        MdpModel m = fixtures::mdp_2x2();
        m.cost = Matrix(2, 2, 0.0);
        m.finalize();
        SoftmaxPolicy p(2, 2);
        p.logits = {0.2, -0.3, 0.1, 0.5};
        const auto ik = induced_kernels(m, p, 1.0);
        for (int s = 0; s < 2; ++s)
            for (int s2 = 0; s2 < 2; ++s2)
                CHECK(ik.hat_kernel(s, s2) == doctest::Approx(ik.state_kernel(s, s2)));
    }
}

TEST_CASE("induced state kernel rows are stochastic") {
    const MdpModel m = fixtures::mdp_2x2();
    SoftmaxPolicy p(2, 2);
    p.logits = {1.0, 0.0, -0.5, 0.25};
    const auto ik = induced_kernels(m, p, 2.0);
    for (int s = 0; s < 2; ++s) {
        double sum = 0.0;
        for (int s2 = 0; s2 < 2; ++s2) sum += ik.state_kernel(s, s2);
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
}
