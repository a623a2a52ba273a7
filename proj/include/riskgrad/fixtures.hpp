#pragma once

// Builtin model fixtures. These ship with the library so experiments and the
// acceptance suite need no external data files.

#include <cstdint>
#include <string>
#include <vector>

#include "riskgrad/model.hpp"

namespace riskgrad::fixtures {

// Mixture components for the logit-mixture chain family.
struct MixtureComponent {
    Matrix kernel;
    Vector cost;
};

// P_theta = sum_k softmax(theta)_k P^(k), C_theta mixed the same way.
// Scores and cost gradients come out in closed form, so the family satisfies
// the boundedness and score assumptions by construction.
ChainModel logit_mixture_chain(std::vector<MixtureComponent> components, int x_star);

// Parameterless two-state chain: both rows (0.5, 0.5), costs (0, ln 4).
ChainModel chain_a();

// Scalar-theta version: both rows (sigma(theta), 1 - sigma(theta)) with the
// logistic sigma, costs (0, ln 4).
ChainModel chain_a_theta();

// One absorbing state with constant cost c.
ChainModel single_state(double c);

// Parameterless chain wrapping a fixed kernel and cost vector.
ChainModel fixed_chain(Matrix kernel, Vector cost, int x_star);

// Three-state, three-component logit mixture with mixed costs; the default
// parameterized fixture with a multi-dimensional score.
ChainModel logit_mix3();

// Two-state, two-action MDP with distinct per-action costs and transitions.
MdpModel mdp_2x2();

// Two-state, two-action MDP whose actions are exact copies of each other;
// the policy gradient vanishes identically on it.
MdpModel mdp_2x2_symmetric();

// Dense random chain with strictly positive rows and costs in [0, 1];
// deterministic in the seed.
ChainModel random_chain(int n_states, std::uint64_t seed);

// Named fixture lookup used by the CLI ("chain-a", "chain-a-theta",
// "logit-mix", "mdp-2x2"). Throws ConfigError for unknown names; whether the
// result is a chain or an MDP is reported through the flag.
struct NamedModel {
    bool is_mdp = false;
    ChainModel chain;
    MdpModel mdp;
};
NamedModel by_name(const std::string& name);

}  // namespace riskgrad::fixtures
