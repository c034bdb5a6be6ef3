#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "ril/kernels.hpp"
#include "ril/mdp.hpp"
#include "ril/policy.hpp"

namespace ril {

struct SolverParams {
    double beta = 1.0;
    double epsilon = 1e-10;
    std::size_t max_iters = 100000;
    Backend backend = Backend::Serial;
    /// Overrides the default argmax tie tolerance 1e-7 * (1 + max|R|).
    std::optional<double> tie_tolerance;

    void validate() const;
};

struct ValueTables {
    Table2 q;
    std::vector<double> v;
    Table2 adv;
    std::optional<double> j;
    std::size_t iterations = 0;
};

using ActionSets = std::vector<std::vector<ActionId>>;

/// rbar(s,a) = E_{S'~tau(s,a)}[R(s,a,S')]
Table2 expected_rewards(const Mdp& m);
Table2 expected_rewards(const Table3& tau, const Table3& reward);

/// Direct linear solve of the policy Bellman system over |S||A| unknowns.
ValueTables policy_q(const Mdp& m, const Policy& pi);

/// Fixed-point iteration of the same system; used to cross-check policy_q.
ValueTables policy_q_iterative(const Mdp& m, const Policy& pi, const SolverParams& params = {});

ValueTables optimal_q(const Mdp& m, const SolverParams& params = {});
ValueTables soft_q(const Mdp& m, const SolverParams& params = {});

Policy boltzmann_rational_policy(const Mdp& m, const SolverParams& params = {});
Policy boltzmann_rational_policy(const ValueTables& optimal, double beta);
Policy mce_policy(const Mdp& m, const SolverParams& params = {});
Policy mce_policy(const ValueTables& soft, double beta);

double tie_tolerance(const Mdp& m, const SolverParams& params = {});

ActionSets optimal_action_sets(const Mdp& m, const SolverParams& params = {});
ActionSets optimal_action_sets(const ValueTables& optimal, double tie_tol);

Policy maximally_supportive_optimal_policy(const Mdp& m, const SolverParams& params = {});
Policy uniform_over(const ActionSets& sets, std::size_t actions);

double policy_value(const Mdp& m, const Policy& pi);

/// Row-wise softmax of beta * logits.
Table2 softmax_rows(const Table2& logits, double beta);

} // namespace ril
