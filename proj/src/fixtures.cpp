#include "riskgrad/fixtures.hpp"

#include <cmath>
#include <memory>
#include <utility>

#include "riskgrad/errors.hpp"
#include "riskgrad/rng.hpp"

namespace riskgrad::fixtures {

namespace {

Vector softmax(const Vector& theta) {
    Vector w(theta.size());
    double mx = theta[0];
    for (double t : theta) mx = std::max(mx, t);
    double z = 0.0;
    for (std::size_t k = 0; k < theta.size(); ++k) {
        w[k] = std::exp(theta[k] - mx);
        z += w[k];
    }
    for (double& v : w) v /= z;
    return w;
}

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

const double kLn4 = std::log(4.0);

}  // namespace

ChainModel logit_mixture_chain(std::vector<MixtureComponent> components, int x_star) {
    if (components.empty()) throw ValidationError("logit mixture needs at least one component");
    const int n = components[0].kernel.rows();
    const int l = static_cast<int>(components.size());
    auto comps = std::make_shared<std::vector<MixtureComponent>>(std::move(components));

    ChainModel m;
    m.n_states = n;
    m.x_star = x_star;
    m.param_dim = l;
    m.c_lower = (*comps)[0].cost[0];
    m.c_upper = (*comps)[0].cost[0];
    for (const auto& c : *comps)
        for (double v : c.cost) {
            m.c_lower = std::min(m.c_lower, v);
            m.c_upper = std::max(m.c_upper, v);
        }

    m.kernel = [comps, n, l](const Vector& theta) {
        const Vector w = softmax(theta);
        Matrix p(n, n, 0.0);
        for (int k = 0; k < l; ++k)
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) p(i, j) += w[k] * (*comps)[k].kernel(i, j);
        return p;
    };
    m.cost = [comps, n, l](const Vector& theta) {
        const Vector w = softmax(theta);
        Vector c(n, 0.0);
        for (int k = 0; k < l; ++k)
            for (int i = 0; i < n; ++i) c[i] += w[k] * (*comps)[k].cost[i];
        return c;
    };
    // d/dtheta_k P = w_k (P^(k) - P), so L_k(x,y) = w_k (P^(k)(x,y)/P(x,y) - 1).
    m.score = [comps, n, l](const Vector& theta) {
        const Vector w = softmax(theta);
        Matrix p(n, n, 0.0);
        for (int k = 0; k < l; ++k)
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) p(i, j) += w[k] * (*comps)[k].kernel(i, j);
        Matrix sc(n * n, l, 0.0);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                if (p(i, j) <= 0.0) continue;
                for (int k = 0; k < l; ++k)
                    sc(i * n + j, k) = w[k] * ((*comps)[k].kernel(i, j) / p(i, j) - 1.0);
            }
        return sc;
    };
    m.cost_grad = [comps, n, l](const Vector& theta) {
        const Vector w = softmax(theta);
        Vector c(n, 0.0);
        for (int k = 0; k < l; ++k)
            for (int i = 0; i < n; ++i) c[i] += w[k] * (*comps)[k].cost[i];
        Matrix g(n, l, 0.0);
        for (int i = 0; i < n; ++i)
            for (int k = 0; k < l; ++k) g(i, k) = w[k] * ((*comps)[k].cost[i] - c[i]);
        return g;
    };
    return m;
}

ChainModel fixed_chain(Matrix kernel, Vector cost, int x_star) {
    ChainModel m;
    m.n_states = kernel.rows();
    m.x_star = x_star;
    m.param_dim = 0;
    m.c_lower = cost[0];
    m.c_upper = cost[0];
    for (double v : cost) {
        m.c_lower = std::min(m.c_lower, v);
        m.c_upper = std::max(m.c_upper, v);
    }
    auto pk = std::make_shared<Matrix>(std::move(kernel));
    auto pc = std::make_shared<Vector>(std::move(cost));
    m.kernel = [pk](const Vector&) { return *pk; };
    m.cost = [pc](const Vector&) { return *pc; };
    return m;
}

ChainModel chain_a() {
    return fixed_chain(Matrix::from_rows({{0.5, 0.5}, {0.5, 0.5}}), {0.0, kLn4}, 0);
}

ChainModel chain_a_theta() {
    ChainModel m;
    m.n_states = 2;
    m.x_star = 0;
    m.param_dim = 1;
    m.c_lower = 0.0;
    m.c_upper = kLn4;
    m.kernel = [](const Vector& theta) {
        const double s = logistic(theta[0]);
        return Matrix::from_rows({{s, 1.0 - s}, {s, 1.0 - s}});
    };
    m.cost = [](const Vector&) { return Vector{0.0, kLn4}; };
    m.score = [](const Vector& theta) {
        // dP(x,0)/dtheta = s(1-s) => L(x,0) = 1-s, L(x,1) = -s.
        const double s = logistic(theta[0]);
        Matrix sc(4, 1, 0.0);
        sc(0, 0) = 1.0 - s;  // (0,0)
        sc(1, 0) = -s;       // (0,1)
        sc(2, 0) = 1.0 - s;  // (1,0)
        sc(3, 0) = -s;       // (1,1)
        return sc;
    };
    m.cost_grad = [](const Vector&) { return Matrix(2, 1, 0.0); };
    return m;
}

ChainModel single_state(double c) {
    return fixed_chain(Matrix::from_rows({{1.0}}), {c}, 0);
}

ChainModel logit_mix3() {
    std::vector<MixtureComponent> comps;
    comps.push_back({Matrix::from_rows({{0.70, 0.20, 0.10},
                                        {0.15, 0.70, 0.15},
                                        {0.25, 0.25, 0.50}}),
                     {0.10, 0.80, 0.40}});
    comps.push_back({Matrix::from_rows({{0.20, 0.50, 0.30},
                                        {0.40, 0.20, 0.40},
                                        {0.30, 0.50, 0.20}}),
                     {0.50, 0.20, 0.90}});
    comps.push_back({Matrix::from_rows({{0.34, 0.33, 0.33},
                                        {0.10, 0.45, 0.45},
                                        {0.45, 0.10, 0.45}}),
                     {0.30, 0.60, 0.15}});
    return logit_mixture_chain(std::move(comps), 0);
}

MdpModel mdp_2x2() {
    MdpModel m;
    m.n_states = 2;
    m.n_actions = 2;
    m.s_star = 0;
    m.transition = Matrix::from_rows({
        {0.85, 0.15},  // s=0, a=0: cautious, tends to stay
        {0.30, 0.70},  // s=0, a=1: risky, drifts to the expensive state
        {0.60, 0.40},  // s=1, a=0
        {0.20, 0.80},  // s=1, a=1
    });
    m.cost = Matrix::from_rows({{0.2, 0.1}, {1.0, 1.5}});
    m.finalize();
    return m;
}

MdpModel mdp_2x2_symmetric() {
    MdpModel m;
    m.n_states = 2;
    m.n_actions = 2;
    m.s_star = 0;
    m.transition = Matrix::from_rows({
        {0.6, 0.4},
        {0.6, 0.4},
        {0.3, 0.7},
        {0.3, 0.7},
    });
    m.cost = Matrix::from_rows({{0.25, 0.25}, {1.0, 1.0}});
    m.finalize();
    return m;
}

ChainModel random_chain(int n_states, std::uint64_t seed) {
    Rng rng(seed);
    Matrix p(n_states, n_states, 0.0);
    for (int i = 0; i < n_states; ++i) {
        double s = 0.0;
        for (int j = 0; j < n_states; ++j) {
            // Exp(1) draws normalize to a Dirichlet(1,...,1) row; strictly
            // positive entries keep the chain primitive.
            const double e = -std::log(1.0 - rng.next_double());
            p(i, j) = 0.05 + e;
            s += p(i, j);
        }
        for (int j = 0; j < n_states; ++j) p(i, j) /= s;
    }
    Vector c(n_states);
    for (int i = 0; i < n_states; ++i) c[i] = rng.next_double();
    return fixed_chain(std::move(p), std::move(c), 0);
}

NamedModel by_name(const std::string& name) {
    NamedModel out;
    if (name == "chain-a") {
        out.chain = chain_a();
    } else if (name == "chain-a-theta") {
        out.chain = chain_a_theta();
    } else if (name == "logit-mix") {
        out.chain = logit_mix3();
    } else if (name == "mdp-2x2") {
        out.is_mdp = true;
        out.mdp = mdp_2x2();
    } else {
        throw ConfigError("unknown fixture name: " + name);
    }
    return out;
}

}  // namespace riskgrad::fixtures
