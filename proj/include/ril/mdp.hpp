#pragma once

#include <compare>
#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ril/policy.hpp"
#include "ril/tables.hpp"

namespace ril {

inline constexpr double kDistributionTol = 1e-12;
inline constexpr std::size_t kDefaultEnumerationCap = 50000;

using StateFlags = std::vector<bool>;

/// Finite tabular MDP. Immutable; copies share the dynamics, so swapping the
/// reward with `with_reward` is cheap.
class Mdp {
public:
    Mdp(std::vector<std::string> states, std::vector<std::string> actions, Table3 tau,
        std::vector<double> mu0, Table3 reward, double gamma);

    /// Unnamed states s0.. and actions a0..
    Mdp(Table3 tau, std::vector<double> mu0, Table3 reward, double gamma);

    std::size_t num_states() const noexcept { return tau_->states(); }
    std::size_t num_actions() const noexcept { return tau_->actions(); }
    const std::vector<std::string>& state_names() const noexcept { return shared_->states; }
    const std::vector<std::string>& action_names() const noexcept { return shared_->actions; }

    const Table3& tau() const noexcept { return *tau_; }
    const Table3& reward() const noexcept { return reward_; }
    std::span<const double> mu0() const noexcept { return shared_->mu0; }
    double gamma() const noexcept { return gamma_; }

    double tau(StateId s, ActionId a, StateId next) const { return (*tau_)(s, a, next); }
    double reward(StateId s, ActionId a, StateId next) const { return reward_(s, a, next); }

    bool possible(StateId s, ActionId a, StateId next) const { return (*tau_)(s, a, next) > 0.0; }
    bool is_terminal(StateId s) const { return terminal_[s]; }
    bool is_initial(StateId s) const { return shared_->mu0[s] > 0.0; }

    /// Derived: tau(s|s,a)=1 and R(s,a,s)=0 for every action.
    const StateFlags& terminal_states() const noexcept { return terminal_; }
    std::vector<StateId> initial_states() const;
    double max_abs_reward() const noexcept { return reward_.max_abs(); }

    Mdp with_reward(Table3 reward) const;
    Mdp with_tau(Table3 tau) const;
    Mdp with_gamma(double gamma) const;

private:
    struct Shared {
        std::vector<std::string> states;
        std::vector<std::string> actions;
        std::vector<double> mu0;
    };

    Mdp(std::shared_ptr<const Shared> shared, std::shared_ptr<const Table3> tau, Table3 reward,
        double gamma);
    void check_shapes() const;
    void derive_terminals();

    std::shared_ptr<const Shared> shared_;
    std::shared_ptr<const Table3> tau_;
    Table3 reward_;
    double gamma_;
    StateFlags terminal_;
};

/// Empty result means the MDP is valid.
std::vector<std::string> validate_mdp(const Mdp& m);

/// Throws ContractError listing the violations, if any.
void require_valid(const Mdp& m);

enum class Possibility { Possible, Impossible };

struct Transition {
    StateId s;
    ActionId a;
    StateId next;
    auto operator<=>(const Transition&) const = default;
};

struct TransitionPartition {
    std::vector<Transition> possible;
    std::vector<Transition> impossible;
};

TransitionPartition classify_transitions(const Mdp& m);

struct ReachabilitySummary {
    StateFlags reachable_states;
    std::vector<Transition> reachable_transitions;
    std::optional<StateFlags> supported_states;

    bool reachable(StateId s) const { return reachable_states[s]; }
};

ReachabilitySummary reachability(const Mdp& m, const Policy* pi = nullptr);

/// Transitions that lie on no possible initial trajectory.
std::vector<Transition> unreachable_transitions(const Mdp& m);

struct Step {
    ActionId action;
    StateId next;
    auto operator<=>(const Step&) const = default;
};

struct Fragment {
    StateId start = 0;
    std::vector<Step> steps;

    std::size_t length() const noexcept { return steps.size(); }
    StateId end() const noexcept { return steps.empty() ? start : steps.back().next; }
    StateId state_at(std::size_t t) const { return t == 0 ? start : steps[t - 1].next; }
    auto operator<=>(const Fragment&) const = default;
};

/// prefix followed by cycle repeated forever.
struct LassoTrajectory {
    Fragment prefix;
    Fragment cycle;
    auto operator<=>(const LassoTrajectory&) const = default;
};

bool is_possible(const Mdp& m, const Fragment& z);
bool is_initial(const Mdp& m, const Fragment& z);

/// Fragments of length 0..max_len ordered by (length, start, steps).
std::vector<Fragment> enumerate_fragments(const Mdp& m, std::size_t max_len, bool possible_only,
                                          bool initial_only,
                                          std::size_t cap = kDefaultEnumerationCap);

/// Possible initial lassos with prefix length <= max_prefix and cycle length
/// in [1, max_cycle]. Each infinite trajectory appears once: the cycle is
/// primitive and the prefix cannot be shortened by rotating the cycle.
std::vector<LassoTrajectory> enumerate_lassos(const Mdp& m, std::size_t max_prefix,
                                              std::size_t max_cycle,
                                              std::size_t cap = kDefaultEnumerationCap);

double fragment_return(const Mdp& m, const Fragment& z);
double lasso_return(const Mdp& m, const LassoTrajectory& x);

/// Concatenation; `b` must start where `a` ends.
Fragment concatenate(const Fragment& a, const Fragment& b);

} // namespace ril
