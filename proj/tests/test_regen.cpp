#include <doctest.h>

#include <cmath>

#include "riskgrad/errors.hpp"
#include "riskgrad/fixtures.hpp"
#include "riskgrad/regen.hpp"
#include "riskgrad/rng.hpp"
#include "riskgrad/spectral.hpp"

using namespace riskgrad;

namespace {
const double kLn4 = std::log(4.0);

// closed form for chain A: g(Lambda) = 0.5 e^-L / (1 - 2 e^-L), e^-L < 0.5
double chain_a_g(double lambda) {
    const double e = std::exp(-lambda);
    return 0.5 * e / (1.0 - 2.0 * e);
}
}  // namespace

TEST_CASE("g_exact closed forms") {
    SUBCASE("one state") {
        const ChainInstance inst = fixtures::single_state(0.9).at({});
        const GValue g = g_exact(inst, 1.0, 0.9);
        CHECK_FALSE(g.divergent);
        CHECK(g.value == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(g_exact(inst, 1.0, 0.4).value == doctest::Approx(std::exp(0.5)).epsilon(1e-14));
    }
    SUBCASE("chain A at the fixed point and above") {
        const ChainInstance inst = fixtures::chain_a().at({});
        CHECK(g_exact(inst, 1.0, std::log(2.5)).value == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(g_exact(inst, 1.0, std::log(3.0)).value == doctest::Approx(0.5).epsilon(1e-12));
        // compare with the geometric-series path sum on a grid
        for (double lam : {0.95, 1.1, 1.6, 2.5}) {
            CHECK(g_exact(inst, 1.0, lam).value ==
                  doctest::Approx(chain_a_g(lam)).epsilon(1e-12));
        }
    }
    SUBCASE("divergence below the radius boundary") {
        const ChainInstance inst = fixtures::chain_a().at({});
        const GValue g = g_exact(inst, 1.0, std::log(2.0) - 0.01);
        CHECK(g.divergent);
        CHECK(std::isinf(g.value));
    }
}

TEST_CASE("g_exact strictly decreasing on its finite domain") {
    const ChainInstance inst = fixtures::logit_mix3().at({0.2, -0.1, 0.4});
    const double lam_theta = solve(inst, 1.0).Lambda;
    double prev = 1e300;
    for (int i = 0; i <= 10; ++i) {
        const double lam = lam_theta + 0.2 * i;
        const GValue g = g_exact(inst, 1.0, lam);
        REQUIRE_FALSE(g.divergent);
        CHECK(g.value < prev);
        prev = g.value;
    }
}

TEST_CASE("fixed point: g(Lambda_theta) = 1") {
    for (std::uint64_t seed : {31u, 32u, 33u}) {
        const ChainInstance inst = fixtures::random_chain(5, seed).at({});
        const double lam = solve(inst, 1.0).Lambda;
        CHECK(g_exact(inst, 1.0, lam).value == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("dg_dLambda_exact") {
    SUBCASE("chain A at Lambda_theta equals -5") {
        const ChainInstance inst = fixtures::chain_a().at({});
        CHECK(dg_dLambda_exact(inst, 1.0, std::log(2.5)) ==
              doctest::Approx(-5.0).epsilon(1e-10));
    }
    SUBCASE("one state") {
        const ChainInstance inst = fixtures::single_state(0.9).at({});
        CHECK(dg_dLambda_exact(inst, 1.0, 0.4) ==
              doctest::Approx(-std::exp(0.5)).epsilon(1e-13));
    }
    SUBCASE("matches central differences of g_exact") {
        Rng rng(41);
        for (int rep = 0; rep < 4; ++rep) {
            const ChainInstance inst = fixtures::random_chain(4, 100 + rep).at({});
            const double lam0 = solve(inst, 1.0).Lambda + 0.3 * rng.next_double();
            const double step = 1e-6;
            const double fd = (g_exact(inst, 1.0, lam0 + step).value -
                               g_exact(inst, 1.0, lam0 - step).value) /
                              (2.0 * step);
            const double exact = dg_dLambda_exact(inst, 1.0, lam0);
            CHECK(exact == doctest::Approx(fd).epsilon(1e-7).scale(std::abs(fd)));
            CHECK(exact < 0.0);
        }
    }
    SUBCASE("equals -1/pi_check(x*) at the fixed point") {
        for (std::uint64_t seed : {51u, 52u}) {
            const ChainInstance inst = fixtures::random_chain(5, seed).at({});
            const SpectralSolution sol = solve(inst, 1.0);
            const double dg = dg_dLambda_exact(inst, 1.0, sol.Lambda);
            CHECK(dg == doctest::Approx(-1.0 / sol.pi_check[inst.x_star]).epsilon(1e-7));
        }
    }
}

TEST_CASE("h via first passage agrees with the eigenvector") {
    SUBCASE("one state") {
        const ChainInstance inst = fixtures::single_state(0.4).at({});
        const Matrix hat = hat_kernel(inst.kernel, inst.cost, 1.0);
        const auto fp = h_via_first_passage(hat, 0, 0.4);
        CHECK(fp.h[0] == doctest::Approx(1.0).epsilon(1e-14));
    }
    SUBCASE("chain A recovers (1, 4)") {
        const ChainInstance inst = fixtures::chain_a().at({});
        const Matrix hat = hat_kernel(inst.kernel, inst.cost, 1.0);
        const auto fp = h_via_first_passage(hat, 0, std::log(2.5));
        CHECK(fp.h[0] == doctest::Approx(1.0).epsilon(1e-10));
        CHECK(fp.h[1] == doctest::Approx(4.0).epsilon(1e-10));
    }
    SUBCASE("random four-state chains within 1e-8") {
        for (std::uint64_t seed : {61u, 62u, 63u}) {
            const ChainInstance inst = fixtures::random_chain(4, seed).at({});
            const SpectralSolution sol = solve(inst, 2.0);
            const Matrix hat = hat_kernel(inst.kernel, inst.cost, 2.0);
            const auto fp = h_via_first_passage(hat, inst.x_star, sol.Lambda);
            for (int x = 0; x < 4; ++x)
                CHECK(fp.h[x] == doctest::Approx(sol.h[x]).epsilon(1e-8));
        }
    }
}

TEST_CASE("sample_cycle") {
    SUBCASE("one-state chain always returns tau = 1") {
        const ChainInstance inst = fixtures::single_state(0.3).at({});
        Rng rng(1);
        for (int i = 0; i < 10; ++i) {
            const Cycle c = sample_cycle(inst, rng);
            CHECK(c.tau == 1);
            CHECK(c.states[0] == 0);
            CHECK(c.costs[0] == doctest::Approx(0.3));
        }
    }
    SUBCASE("chain A mean return time is 2") {
        const ChainInstance inst = fixtures::chain_a().at({});
        Rng rng(7);
        const long n = 100000;
        double sum = 0.0, sum_sq = 0.0;
        Cycle c;
        for (long i = 0; i < n; ++i) {
            sample_cycle(inst, rng, 1000000, c);
            CHECK(c.states[0] == 0);
            sum += static_cast<double>(c.tau);
            sum_sq += static_cast<double>(c.tau) * c.tau;
        }
        const double mean = sum / n;
        const double se = std::sqrt((sum_sq / n - mean * mean) / n);
        CHECK(std::abs(mean - 2.0) <= 3.0 * se);
    }
    SUBCASE("cap is enforced") {
        const ChainInstance inst = fixtures::chain_a().at({});
        Rng rng(1);
        bool threw = false;
        for (int i = 0; i < 2000 && !threw; ++i) {
            try {
                Cycle c;
                sample_cycle(inst, rng, 2, c);
            } catch (const CycleCapExceeded&) {
                threw = true;
            }
        }
        CHECK(threw);
    }
    SUBCASE("single-action MDP reduces to chain sampling") {
        MdpModel m;
        m.n_states = 2;
        m.n_actions = 1;
        m.s_star = 0;
        m.transition = Matrix::from_rows({{0.5, 0.5}, {0.5, 0.5}});
        m.cost = Matrix::from_rows({{0.0}, {kLn4}});
        m.finalize();
        SoftmaxPolicy p(2, 1);
        Rng rng(17);
        const Cycle c = sample_cycle(m, p, rng);
        CHECK(c.actions.size() == static_cast<std::size_t>(c.tau));
        for (int a : c.actions) CHECK(a == 0);
        // single action => scores vanish identically
        for (long i = 0; i < c.tau; ++i) CHECK(c.scores(static_cast<int>(i), 0) == 0.0);
    }
}

TEST_CASE("cycle weights are unbiased for g at safe Lambda") {
    // variance is finite at Lambda = 1.2 for chain A (squared path weights
    // stay geometrically summable there)
    const ChainInstance inst = fixtures::chain_a().at({});
    const double lambda = 1.2;
    const double target = g_exact(inst, 1.0, lambda).value;
    Rng rng(99);
    const long n = 200000;
    double sum = 0.0, sum_sq = 0.0;
    Cycle c;
    for (long i = 0; i < n; ++i) {
        sample_cycle(inst, rng, 1000000, c);
        double log_h = -static_cast<double>(c.tau) * lambda;
        for (double cost : c.costs) log_h += cost;
        const double h = std::exp(log_h);
        sum += h;
        sum_sq += h * h;
    }
    const double mean = sum / n;
    const double se = std::sqrt((sum_sq / n - mean * mean) / n);
    CHECK(std::abs(mean - target) <= 4.0 * se);
}

TEST_CASE("deterministic sampling given the seed") {
    const ChainInstance inst = fixtures::chain_a().at({});
    Rng a(123), b(123);
    for (int i = 0; i < 50; ++i) {
        const Cycle ca = sample_cycle(inst, a);
        const Cycle cb = sample_cycle(inst, b);
        CHECK(ca.tau == cb.tau);
        CHECK(ca.states == cb.states);
    }
}
