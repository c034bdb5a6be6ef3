#pragma once

#include <cstdint>
#include <vector>

#include "ril/mdp.hpp"

namespace ril {

struct MdpSamplerConfig {
    std::size_t min_states = 2;
    std::size_t max_states = 6;
    std::size_t min_actions = 2;
    std::size_t max_actions = 4;
    /// Chance of zeroing a transition entry before normalizing.
    double sparsity = 0.5;
    /// Chance of cutting every edge into one non-initial state.
    double orphan_prob = 0.5;
    double terminal_prob = 0.2;
    std::size_t max_initial = 3;
    std::vector<double> gammas{0.5, 0.9};
    double reward_low = -1.0;
    double reward_high = 1.0;

    void validate() const;
};

/// Random valid MDP, a pure function of (config, seed).
Mdp sample_mdp(const MdpSamplerConfig& config, std::uint64_t seed);

} // namespace ril
