#include "ril/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Dense>

#include "ril/errors.hpp"

namespace ril {

void SolverParams::validate() const {
    if (!(beta > 0.0) || !std::isfinite(beta)) throw ContractError("beta must be positive");
    if (!(epsilon > 0.0)) throw ContractError("epsilon must be positive");
    if (max_iters == 0) throw ContractError("max_iters must be positive");
}

Table2 expected_rewards(const Table3& tau, const Table3& reward) {
    Table2 out(tau.states(), tau.actions());
    for (StateId s = 0; s < tau.states(); ++s)
        for (ActionId a = 0; a < tau.actions(); ++a) {
            const auto p = tau.row(s, a);
            const auto r = reward.row(s, a);
            double acc = 0.0;
            for (StateId t = 0; t < tau.states(); ++t)
                if (p[t] > 0.0) acc += p[t] * r[t];
            out(s, a) = acc;
        }
    return out;
}

Table2 expected_rewards(const Mdp& m) { return expected_rewards(m.tau(), m.reward()); }

namespace {

void check_gamma(const Mdp& m) {
    if (!(m.gamma() > 0.0 && m.gamma() < 1.0)) throw ContractError("gamma out of (0,1)");
}

void check_policy(const Mdp& m, const Policy& pi) {
    if (pi.states() != m.num_states() || pi.actions() != m.num_actions())
        throw ContractError("policy shape does not match MDP");
}

/// (P q)(s,a) = sum_s' tau(s'|s,a) sum_a' pi(a'|s') q(s',a')
std::vector<double> policy_values(const Table2& q, const Policy& pi) {
    std::vector<double> v(q.states(), 0.0);
    for (StateId s = 0; s < q.states(); ++s)
        for (ActionId a = 0; a < q.actions(); ++a) v[s] += pi(s, a) * q(s, a);
    return v;
}

void fill_policy_tables(const Mdp& m, const Policy& pi, ValueTables& out) {
    out.v = policy_values(out.q, pi);
    out.adv = Table2(m.num_states(), m.num_actions());
    for (StateId s = 0; s < m.num_states(); ++s)
        for (ActionId a = 0; a < m.num_actions(); ++a) out.adv(s, a) = out.q(s, a) - out.v[s];
    double j = 0.0;
    for (StateId s = 0; s < m.num_states(); ++s) j += m.mu0()[s] * out.v[s];
    out.j = j;
}

double sup_diff(std::span<const double> a, std::span<const double> b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
    return d;
}

double stop_threshold(const Mdp& m, const SolverParams& params) {
    return params.epsilon * (1.0 - m.gamma()) / (2.0 * m.gamma());
}

template <class ValueFn>
ValueTables iterate_values(const Mdp& m, const SolverParams& params, const char* name,
                           ValueFn&& value_fn) {
    params.validate();
    check_gamma(m);
    const std::size_t n = m.num_states();
    const Table2 rbar = expected_rewards(m);
    const double threshold = stop_threshold(m, params);
    std::vector<double> v(n, 0.0);
    std::vector<double> next(n, 0.0);
    Table2 q(n, m.num_actions());
    double residual = std::numeric_limits<double>::infinity();
    std::size_t it = 0;
    while (it < params.max_iters) {
        bellman_backup(params.backend, m.tau(), rbar, m.gamma(), v, q);
        value_fn(q, std::span<double>(next));
        residual = sup_diff(next, v);
        std::swap(v, next);
        ++it;
        if (residual < threshold) break;
    }
    if (!(residual < threshold))
        throw ConvergenceError(std::string(name) + " did not converge within " +
                                   std::to_string(params.max_iters) + " iterations",
                               residual, it);
    ValueTables out;
    bellman_backup(params.backend, m.tau(), rbar, m.gamma(), v, q);
    value_fn(q, std::span<double>(next));
    out.q = std::move(q);
    out.v = std::move(next);
    out.adv = Table2(n, m.num_actions());
    for (StateId s = 0; s < n; ++s)
        for (ActionId a = 0; a < m.num_actions(); ++a) out.adv(s, a) = out.q(s, a) - out.v[s];
    out.iterations = it;
    return out;
}

} // namespace

ValueTables policy_q(const Mdp& m, const Policy& pi) {
    check_gamma(m);
    check_policy(m, pi);
    const std::size_t n = m.num_states();
    const std::size_t k = m.num_actions();
    const auto dim = static_cast<Eigen::Index>(n * k);
    const Table2 rbar = expected_rewards(m);
    Eigen::MatrixXd system = Eigen::MatrixXd::Identity(dim, dim);
    Eigen::VectorXd rhs(dim);
    for (StateId s = 0; s < n; ++s)
        for (ActionId a = 0; a < k; ++a) {
            const auto row = static_cast<Eigen::Index>(s * k + a);
            rhs(row) = rbar(s, a);
            for (StateId t = 0; t < n; ++t) {
                const double p = m.tau(s, a, t);
                if (p == 0.0) continue;
                for (ActionId b = 0; b < k; ++b)
                    system(row, static_cast<Eigen::Index>(t * k + b)) -= m.gamma() * p * pi(t, b);
            }
        }
    const Eigen::VectorXd x = system.partialPivLu().solve(rhs);
    const double residual = (system * x - rhs).lpNorm<Eigen::Infinity>();
    const double bound = 1e-10 * (1.0 + m.max_abs_reward());
    if (!(residual < bound))
        throw ConvergenceError("policy evaluation residual exceeds bound", residual, 1);
    ValueTables out;
    out.q = Table2(n, k);
    for (StateId s = 0; s < n; ++s)
        for (ActionId a = 0; a < k; ++a) out.q(s, a) = x(static_cast<Eigen::Index>(s * k + a));
    fill_policy_tables(m, pi, out);
    out.iterations = 1;
    return out;
}

ValueTables policy_q_iterative(const Mdp& m, const Policy& pi, const SolverParams& params) {
    params.validate();
    check_gamma(m);
    check_policy(m, pi);
    const std::size_t n = m.num_states();
    const Table2 rbar = expected_rewards(m);
    const double threshold = stop_threshold(m, params);
    Table2 q(n, m.num_actions());
    Table2 next(n, m.num_actions());
    double residual = std::numeric_limits<double>::infinity();
    std::size_t it = 0;
    while (it < params.max_iters && !(residual < threshold)) {
        const auto v = policy_values(q, pi);
        bellman_backup(params.backend, m.tau(), rbar, m.gamma(), v, next);
        residual = sup_diff(next.flat(), q.flat());
        std::swap(q, next);
        ++it;
    }
    if (!(residual < threshold))
        throw ConvergenceError("policy iteration did not converge", residual, it);
    ValueTables out;
    out.q = std::move(q);
    fill_policy_tables(m, pi, out);
    out.iterations = it;
    return out;
}

ValueTables optimal_q(const Mdp& m, const SolverParams& params) {
    return iterate_values(m, params, "value iteration",
                          [&](const Table2& q, std::span<double> v) {
                              greedy_value(params.backend, q, v);
                          });
}

ValueTables soft_q(const Mdp& m, const SolverParams& params) {
    return iterate_values(m, params, "soft value iteration",
                          [&](const Table2& q, std::span<double> v) {
                              soft_value(params.backend, q, params.beta, v);
                          });
}

Table2 softmax_rows(const Table2& logits, double beta) {
    Table2 out(logits.states(), logits.actions());
    for (StateId s = 0; s < logits.states(); ++s) {
        const auto row = logits.row(s);
        double m = -INFINITY;
        for (double x : row) m = std::max(m, beta * x);
        double sum = 0.0;
        for (ActionId a = 0; a < row.size(); ++a) sum += (out(s, a) = std::exp(beta * row[a] - m));
        for (ActionId a = 0; a < row.size(); ++a) out(s, a) /= sum;
    }
    return out;
}

Policy boltzmann_rational_policy(const ValueTables& optimal, double beta) {
    return Policy(softmax_rows(optimal.adv, beta));
}

Policy boltzmann_rational_policy(const Mdp& m, const SolverParams& params) {
    return boltzmann_rational_policy(optimal_q(m, params), params.beta);
}

Policy mce_policy(const ValueTables& soft, double beta) { return Policy(softmax_rows(soft.q, beta)); }

Policy mce_policy(const Mdp& m, const SolverParams& params) {
    return mce_policy(soft_q(m, params), params.beta);
}

double tie_tolerance(const Mdp& m, const SolverParams& params) {
    return params.tie_tolerance.value_or(1e-7 * (1.0 + m.max_abs_reward()));
}

ActionSets optimal_action_sets(const ValueTables& optimal, double tie_tol) {
    ActionSets out(optimal.adv.states());
    for (StateId s = 0; s < optimal.adv.states(); ++s) {
        const auto row = optimal.adv.row(s);
        const double best = *std::max_element(row.begin(), row.end());
        for (ActionId a = 0; a < row.size(); ++a)
            if (row[a] >= best - tie_tol) out[s].push_back(a);
    }
    return out;
}

ActionSets optimal_action_sets(const Mdp& m, const SolverParams& params) {
    return optimal_action_sets(optimal_q(m, params), tie_tolerance(m, params));
}

Policy uniform_over(const ActionSets& sets, std::size_t actions) {
    Table2 probs(sets.size(), actions);
    for (StateId s = 0; s < sets.size(); ++s) {
        if (sets[s].empty()) throw ContractError("empty action set at state " + std::to_string(s));
        for (ActionId a : sets[s]) probs(s, a) = 1.0 / static_cast<double>(sets[s].size());
    }
    return Policy(std::move(probs));
}

Policy maximally_supportive_optimal_policy(const Mdp& m, const SolverParams& params) {
    return uniform_over(optimal_action_sets(m, params), m.num_actions());
}

double policy_value(const Mdp& m, const Policy& pi) { return *policy_q(m, pi).j; }

} // namespace ril
