#include "ril/mdp.hpp"

#include <cmath>
#include <deque>
#include <sstream>

#include "ril/errors.hpp"

namespace ril {

namespace {

std::vector<std::string> default_names(char prefix, std::size_t n) {
    std::vector<std::string> names;
    names.reserve(n);
    for (std::size_t i = 0; i < n; ++i) names.push_back(prefix + std::to_string(i));
    return names;
}

} // namespace

Mdp::Mdp(std::vector<std::string> states, std::vector<std::string> actions, Table3 tau,
         std::vector<double> mu0, Table3 reward, double gamma)
    : shared_(std::make_shared<const Shared>(
          Shared{std::move(states), std::move(actions), std::move(mu0)})),
      tau_(std::make_shared<const Table3>(std::move(tau))),
      reward_(std::move(reward)),
      gamma_(gamma) {
    check_shapes();
    derive_terminals();
}

Mdp::Mdp(Table3 tau, std::vector<double> mu0, Table3 reward, double gamma)
    : Mdp(default_names('s', tau.states()), default_names('a', tau.actions()), std::move(tau),
          std::move(mu0), std::move(reward), gamma) {}

Mdp::Mdp(std::shared_ptr<const Shared> shared, std::shared_ptr<const Table3> tau, Table3 reward,
         double gamma)
    : shared_(std::move(shared)), tau_(std::move(tau)), reward_(std::move(reward)), gamma_(gamma) {
    check_shapes();
    derive_terminals();
}

void Mdp::check_shapes() const {
    const std::size_t n = tau_->states();
    const std::size_t k = tau_->actions();
    if (n == 0 || k == 0) throw ContractError("MDP needs at least one state and one action");
    if (shared_->states.size() != n) throw ContractError("state name count does not match tau");
    if (shared_->actions.size() != k) throw ContractError("action name count does not match tau");
    if (shared_->mu0.size() != n) throw ContractError("mu0 length does not match tau");
    if (reward_.states() != n || reward_.actions() != k)
        throw ContractError("reward shape does not match tau");
}

void Mdp::derive_terminals() {
    const std::size_t n = num_states();
    terminal_.assign(n, true);
    for (StateId s = 0; s < n; ++s) {
        for (ActionId a = 0; a < num_actions(); ++a) {
            if (std::abs((*tau_)(s, a, s) - 1.0) > kDistributionTol ||
                std::abs(reward_(s, a, s)) > kDistributionTol) {
                terminal_[s] = false;
                break;
            }
        }
    }
}

std::vector<StateId> Mdp::initial_states() const {
    std::vector<StateId> out;
    for (StateId s = 0; s < num_states(); ++s)
        if (is_initial(s)) out.push_back(s);
    return out;
}

Mdp Mdp::with_reward(Table3 reward) const { return Mdp(shared_, tau_, std::move(reward), gamma_); }

Mdp Mdp::with_tau(Table3 tau) const {
    return Mdp(shared_, std::make_shared<const Table3>(std::move(tau)), reward_, gamma_);
}

Mdp Mdp::with_gamma(double gamma) const { return Mdp(shared_, tau_, reward_, gamma); }

std::vector<std::string> validate_mdp(const Mdp& m) {
    std::vector<std::string> out;
    auto report = [&out](auto&&... parts) {
        std::ostringstream os;
        (os << ... << parts);
        out.push_back(os.str());
    };
    const std::size_t n = m.num_states();
    for (StateId s = 0; s < n; ++s) {
        for (ActionId a = 0; a < m.num_actions(); ++a) {
            double sum = 0.0;
            for (StateId t = 0; t < n; ++t) {
                const double p = m.tau(s, a, t);
                if (!std::isfinite(p) || p < 0.0)
                    report("tau[", s, "][", a, "][", t, "] = ", p, " is not a probability");
                sum += p;
            }
            if (std::abs(sum - 1.0) > kDistributionTol)
                report("tau[", s, "][", a, "] row sum ", sum, " != 1");
            for (StateId t = 0; t < n; ++t)
                if (!std::isfinite(m.reward(s, a, t)))
                    report("reward[", s, "][", a, "][", t, "] is not finite");
        }
    }
    double sum = 0.0;
    for (StateId s = 0; s < n; ++s) {
        const double p = m.mu0()[s];
        if (!std::isfinite(p) || p < 0.0) report("mu0[", s, "] = ", p, " is not a probability");
        sum += p;
    }
    if (std::abs(sum - 1.0) > kDistributionTol) report("mu0 sum ", sum, " != 1");
    if (!(m.gamma() > 0.0 && m.gamma() < 1.0)) report("gamma ", m.gamma(), " out of (0,1)");
    return out;
}

void require_valid(const Mdp& m) {
    auto violations = validate_mdp(m);
    if (violations.empty()) return;
    std::string msg = "invalid MDP:";
    for (const auto& v : violations) msg += " " + v + ";";
    throw ContractError(msg);
}

TransitionPartition classify_transitions(const Mdp& m) {
    TransitionPartition out;
    for (StateId s = 0; s < m.num_states(); ++s)
        for (ActionId a = 0; a < m.num_actions(); ++a)
            for (StateId t = 0; t < m.num_states(); ++t)
                (m.possible(s, a, t) ? out.possible : out.impossible).push_back({s, a, t});
    return out;
}

namespace {

StateFlags search(const Mdp& m, const Policy* pi) {
    const std::size_t n = m.num_states();
    StateFlags seen(n, false);
    std::deque<StateId> frontier;
    for (StateId s : m.initial_states()) {
        seen[s] = true;
        frontier.push_back(s);
    }
    while (!frontier.empty()) {
        const StateId s = frontier.front();
        frontier.pop_front();
        for (ActionId a = 0; a < m.num_actions(); ++a) {
            if (pi && (*pi)(s, a) <= 0.0) continue;
            for (StateId t = 0; t < n; ++t) {
                if (m.possible(s, a, t) && !seen[t]) {
                    seen[t] = true;
                    frontier.push_back(t);
                }
            }
        }
    }
    return seen;
}

} // namespace

ReachabilitySummary reachability(const Mdp& m, const Policy* pi) {
    ReachabilitySummary out;
    out.reachable_states = search(m, nullptr);
    for (StateId s = 0; s < m.num_states(); ++s) {
        if (!out.reachable_states[s]) continue;
        for (ActionId a = 0; a < m.num_actions(); ++a)
            for (StateId t = 0; t < m.num_states(); ++t)
                if (m.possible(s, a, t)) out.reachable_transitions.push_back({s, a, t});
    }
    if (pi) {
        if (pi->states() != m.num_states() || pi->actions() != m.num_actions())
            throw ContractError("policy shape does not match MDP");
        out.supported_states = search(m, pi);
    }
    return out;
}

std::vector<Transition> unreachable_transitions(const Mdp& m) {
    const StateFlags reach = search(m, nullptr);
    std::vector<Transition> out;
    for (StateId s = 0; s < m.num_states(); ++s)
        for (ActionId a = 0; a < m.num_actions(); ++a)
            for (StateId t = 0; t < m.num_states(); ++t)
                if (!reach[s] || !m.possible(s, a, t)) out.push_back({s, a, t});
    return out;
}

bool is_possible(const Mdp& m, const Fragment& z) {
    StateId s = z.start;
    for (const Step& st : z.steps) {
        if (!m.possible(s, st.action, st.next)) return false;
        s = st.next;
    }
    return true;
}

bool is_initial(const Mdp& m, const Fragment& z) { return m.is_initial(z.start); }

std::vector<Fragment> enumerate_fragments(const Mdp& m, std::size_t max_len, bool possible_only,
                                          bool initial_only, std::size_t cap) {
    std::vector<Fragment> out;
    std::vector<Fragment> level;
    for (StateId s = 0; s < m.num_states(); ++s)
        if (!initial_only || m.is_initial(s)) level.push_back(Fragment{s, {}});
    for (std::size_t len = 0;; ++len) {
        if (out.size() + level.size() > cap)
            throw CapExceeded("fragment enumeration exceeds cap of " + std::to_string(cap));
        out.insert(out.end(), level.begin(), level.end());
        if (len == max_len) break;
        std::vector<Fragment> next;
        for (const Fragment& z : level) {
            const StateId e = z.end();
            for (ActionId a = 0; a < m.num_actions(); ++a) {
                for (StateId t = 0; t < m.num_states(); ++t) {
                    if (possible_only && !m.possible(e, a, t)) continue;
                    Fragment y = z;
                    y.steps.push_back({a, t});
                    next.push_back(std::move(y));
                    if (out.size() + next.size() > cap)
                        throw CapExceeded("fragment enumeration exceeds cap of " +
                                          std::to_string(cap));
                }
            }
        }
        level = std::move(next);
    }
    return out;
}

namespace {

bool primitive(const std::vector<Step>& cycle) {
    const std::size_t c = cycle.size();
    for (std::size_t d = 1; d < c; ++d) {
        if (c % d != 0) continue;
        bool periodic = true;
        for (std::size_t i = d; i < c && periodic; ++i) periodic = cycle[i] == cycle[i - d];
        if (periodic) return false;
    }
    return true;
}

/// Source state of the last step.
StateId last_source(const Fragment& z) { return z.state_at(z.length() - 1); }

} // namespace

std::vector<LassoTrajectory> enumerate_lassos(const Mdp& m, std::size_t max_prefix,
                                              std::size_t max_cycle, std::size_t cap) {
    if (max_cycle == 0) throw ContractError("lasso cycles need length >= 1");
    const auto prefixes = enumerate_fragments(m, max_prefix, true, true, cap);
    const auto loops = enumerate_fragments(m, max_cycle, true, false, cap);
    std::vector<LassoTrajectory> out;
    for (const Fragment& p : prefixes) {
        for (const Fragment& c : loops) {
            if (c.length() == 0 || c.start != p.end() || c.end() != c.start) continue;
            if (!primitive(c.steps)) continue;
            if (p.length() > 0 && p.steps.back() == c.steps.back() &&
                last_source(p) == last_source(c))
                continue;
            if (out.size() >= cap)
                throw CapExceeded("lasso enumeration exceeds cap of " + std::to_string(cap));
            out.push_back({p, c});
        }
    }
    return out;
}

double fragment_return(const Mdp& m, const Fragment& z) {
    double g = 0.0;
    double discount = 1.0;
    StateId s = z.start;
    for (const Step& st : z.steps) {
        g += discount * m.reward(s, st.action, st.next);
        discount *= m.gamma();
        s = st.next;
    }
    return g;
}

double lasso_return(const Mdp& m, const LassoTrajectory& x) {
    if (x.cycle.length() == 0 || x.cycle.start != x.prefix.end() ||
        x.cycle.end() != x.cycle.start)
        throw ContractError("lasso cycle does not close on the prefix end");
    const double gp = std::pow(m.gamma(), static_cast<double>(x.prefix.length()));
    const double gc = std::pow(m.gamma(), static_cast<double>(x.cycle.length()));
    return fragment_return(m, x.prefix) + gp * fragment_return(m, x.cycle) / (1.0 - gc);
}

Fragment concatenate(const Fragment& a, const Fragment& b) {
    if (a.end() != b.start) throw ContractError("fragments do not concatenate");
    Fragment out = a;
    out.steps.insert(out.steps.end(), b.steps.begin(), b.steps.end());
    return out;
}

} // namespace ril
