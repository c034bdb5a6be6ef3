#include "ril/sampler.hpp"

#include <algorithm>

#include "ril/errors.hpp"
#include "ril/rng.hpp"

namespace ril {

void MdpSamplerConfig::validate() const {
    if (min_states < 2 || max_states < min_states)
        throw ContractError("sampler needs 2 <= min_states <= max_states");
    if (min_actions < 1 || max_actions < min_actions)
        throw ContractError("sampler needs 1 <= min_actions <= max_actions");
    for (double p : {sparsity, orphan_prob, terminal_prob})
        if (!(p >= 0.0 && p <= 1.0)) throw ContractError("sampler probabilities must lie in [0,1]");
    if (max_initial == 0) throw ContractError("sampler needs max_initial >= 1");
    if (gammas.empty()) throw ContractError("sampler needs at least one gamma");
    for (double g : gammas)
        if (!(g > 0.0 && g < 1.0)) throw ContractError("sampler gamma out of (0,1)");
    if (!(reward_low < reward_high)) throw ContractError("sampler reward range is empty");
}

Mdp sample_mdp(const MdpSamplerConfig& config, std::uint64_t seed) {
    config.validate();
    Rng rng(seed);
    const std::size_t n = rng.between(config.min_states, config.max_states);
    const std::size_t k = rng.between(config.min_actions, config.max_actions);

    std::vector<bool> terminal(n, false);
    for (StateId s = 0; s < n; ++s) terminal[s] = rng.bernoulli(config.terminal_prob);
    if (std::all_of(terminal.begin(), terminal.end(), [](bool t) { return t; }))
        terminal[rng.index(n)] = false;

    std::vector<StateId> candidates;
    for (StateId s = 0; s < n; ++s)
        if (!terminal[s]) candidates.push_back(s);
    const std::size_t support =
        rng.between(1, std::max<std::size_t>(1, std::min({config.max_initial, n - 1, candidates.size()})));
    std::vector<StateId> initial;
    while (initial.size() < support) {
        const StateId s = candidates[rng.index(candidates.size())];
        if (std::find(initial.begin(), initial.end(), s) == initial.end()) initial.push_back(s);
    }
    std::vector<double> mu0(n, 0.0);
    double total = 0.0;
    for (StateId s : initial) total += (mu0[s] = 0.2 + rng.uniform());
    for (double& p : mu0) p /= total;

    Table3 tau(n, k);
    for (StateId s = 0; s < n; ++s)
        for (ActionId a = 0; a < k; ++a) {
            auto row = tau.row(s, a);
            if (terminal[s]) {
                row[s] = 1.0;
                continue;
            }
            for (StateId t = 0; t < n; ++t)
                row[t] = rng.bernoulli(config.sparsity) ? 0.0 : 0.05 + rng.uniform();
            if (std::all_of(row.begin(), row.end(), [](double p) { return p == 0.0; }))
                row[rng.index(n)] = 1.0;
        }

    if (rng.bernoulli(config.orphan_prob)) {
        std::vector<StateId> pool;
        for (StateId s = 0; s < n; ++s)
            if (mu0[s] == 0.0) pool.push_back(s);
        if (!pool.empty()) {
            const StateId o = pool[rng.index(pool.size())];
            for (StateId s = 0; s < n; ++s) {
                if (s == o) continue;
                for (ActionId a = 0; a < k; ++a) {
                    auto row = tau.row(s, a);
                    row[o] = 0.0;
                    if (std::all_of(row.begin(), row.end(), [](double p) { return p == 0.0; }))
                        row[s] = 1.0;
                }
            }
        }
    }

    for (StateId s = 0; s < n; ++s)
        for (ActionId a = 0; a < k; ++a) {
            auto row = tau.row(s, a);
            double sum = 0.0;
            for (double p : row) sum += p;
            for (double& p : row) p /= sum;
        }

    Table3 reward(n, k);
    for (StateId s = 0; s < n; ++s)
        for (ActionId a = 0; a < k; ++a)
            for (StateId t = 0; t < n; ++t)
                reward(s, a, t) = terminal[s] && t == s
                                      ? 0.0
                                      : rng.uniform(config.reward_low, config.reward_high);

    const double gamma = config.gammas[rng.index(config.gammas.size())];
    return Mdp(std::move(tau), std::move(mu0), std::move(reward), gamma);
}

} // namespace ril
