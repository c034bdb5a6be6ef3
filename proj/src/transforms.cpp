#include "ril/transforms.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <Eigen/Dense>

#include "ril/errors.hpp"
#include "ril/rng.hpp"

namespace ril {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

constexpr double kSpecTol = 1e-12;
constexpr double kRedistributionTol = 1e-10;

bool same_shape(const Mdp& m, const Table3& t) {
    return t.states() == m.num_states() && t.actions() == m.num_actions();
}

double row_expectation(std::span<const double> p, std::span<const double> x) {
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i)
        if (p[i] > 0.0) acc += p[i] * x[i];
    return acc;
}

/// Removes the tau-expectation from every (s,a) row on its support; entries
/// off the support are left as drawn.
void center_rows(const Mdp& m, Table3& x) {
    for (StateId s = 0; s < m.num_states(); ++s)
        for (ActionId a = 0; a < m.num_actions(); ++a) {
            const auto p = m.tau().row(s, a);
            auto row = x.row(s, a);
            const double e = row_expectation(p, row);
            for (StateId t = 0; t < m.num_states(); ++t)
                if (p[t] > 0.0) row[t] -= e;
        }
}

Table3 random_table(const Mdp& m, Rng& rng, double magnitude) {
    Table3 x(m.num_states(), m.num_actions());
    for (double& v : x.flat()) v = rng.uniform(-magnitude, magnitude);
    return x;
}

bool stochastic_row_exists(const Mdp& m) {
    for (StateId s = 0; s < m.num_states(); ++s)
        for (ActionId a = 0; a < m.num_actions(); ++a) {
            const auto p = m.tau().row(s, a);
            if (std::count_if(p.begin(), p.end(), [](double x) { return x > 0.0; }) >= 2)
                return true;
        }
    return false;
}

Mask random_mask(const std::vector<Transition>& candidates, Rng& rng, double magnitude,
                 const std::vector<Transition>& required) {
    Mask out;
    for (const auto& t : candidates)
        if (rng.bernoulli(0.5)) out.transitions.push_back(t);
    if (out.transitions.empty() && !candidates.empty())
        out.transitions.push_back(candidates[rng.index(candidates.size())]);
    if (!required.empty()) {
        const Transition pick = required[rng.index(required.size())];
        if (std::find(out.transitions.begin(), out.transitions.end(), pick) ==
            out.transitions.end()) {
            out.transitions.push_back(pick);
            std::sort(out.transitions.begin(), out.transitions.end());
        }
    }
    for (std::size_t i = 0; i < out.transitions.size(); ++i)
        out.replacement.push_back(rng.uniform(-magnitude, magnitude));
    return out;
}

std::vector<double> distinct_nonzero(const Table3& r) {
    std::set<double> vals(r.flat().begin(), r.flat().end());
    vals.erase(0.0);
    return {vals.begin(), vals.end()};
}

ZeroPreservingMonotone random_monotone(const std::vector<double>& values, Rng& rng) {
    std::vector<double> pos, neg;
    for (double v : values) (v > 0 ? pos : neg).push_back(v);
    if (pos.empty()) pos.push_back(1.0);
    if (neg.empty()) neg.push_back(-1.0);
    std::sort(pos.begin(), pos.end());
    std::sort(neg.begin(), neg.end(), std::greater<>());
    ZeroPreservingMonotone f;
    f.breakpoints.emplace_back(0.0, 0.0);
    double x0 = 0.0, y0 = 0.0;
    for (double x : pos) {
        y0 += rng.log_uniform_factor(2.0) * (x - x0);
        x0 = x;
        f.breakpoints.emplace_back(x, y0);
    }
    x0 = 0.0;
    y0 = 0.0;
    for (double x : neg) {
        y0 += rng.log_uniform_factor(2.0) * (x - x0);
        x0 = x;
        f.breakpoints.emplace_back(x, y0);
    }
    std::sort(f.breakpoints.begin(), f.breakpoints.end());
    return f;
}

/// Ratio spread of f(x)/x over the given nonzero values; 1 means linear.
double nonlinearity(const ZeroPreservingMonotone& f, const std::vector<double>& values) {
    double lo = INFINITY, hi = 0.0;
    for (double x : values) {
        const double r = f(x) / x;
        lo = std::min(lo, r);
        hi = std::max(hi, r);
    }
    return values.empty() ? 1.0 : hi / lo;
}

OptimalityPreserving optimality_preserving(const Mdp& m, const ValueTables& opt, ActionSets sets,
                                           Rng& rng, double magnitude) {
    OptimalityPreserving out;
    out.optimal = std::move(sets);
    out.psi = opt.v;
    out.gaps = Table2(m.num_states(), m.num_actions());
    for (StateId s = 0; s < m.num_states(); ++s)
        for (ActionId a = 0; a < m.num_actions(); ++a) {
            const auto& o = out.optimal[s];
            if (std::find(o.begin(), o.end(), a) == o.end())
                out.gaps(s, a) = rng.uniform(0.1, 1.0) * magnitude;
        }
    out.split = random_table(m, rng, magnitude);
    center_rows(m, out.split);
    return out;
}

std::vector<ActionId> random_subset(std::size_t actions, Rng& rng) {
    std::vector<ActionId> out;
    while (out.empty())
        for (ActionId a = 0; a < actions; ++a)
            if (rng.bernoulli(0.5)) out.push_back(a);
    return out;
}

} // namespace

double ZeroPreservingMonotone::operator()(double x) const {
    if (x == 0.0) return 0.0;
    const auto& b = breakpoints;
    auto hi = std::upper_bound(b.begin(), b.end(), x,
                               [](double v, const auto& p) { return v < p.first; });
    if (hi == b.begin()) hi = b.begin() + 1;
    if (hi == b.end()) hi = b.end() - 1;
    const auto lo = hi - 1;
    const double slope = (hi->second - lo->second) / (hi->first - lo->first);
    return lo->second + slope * (x - lo->first);
}

std::string_view spec_tag(const TransformSpec& spec) {
    return std::visit(Overloaded{
                          [](const Identity&) { return std::string_view("identity"); },
                          [](const PotentialShaping&) { return std::string_view("potential_shaping"); },
                          [](const SPrimeRedistribution&) {
                              return std::string_view("sprime_redistribution");
                          },
                          [](const PositiveLinearScaling&) {
                              return std::string_view("positive_linear_scaling");
                          },
                          [](const ZeroPreservingMonotone&) {
                              return std::string_view("zero_preserving_monotone");
                          },
                          [](const Mask&) { return std::string_view("mask"); },
                          [](const OptimalityPreserving&) {
                              return std::string_view("optimality_preserving");
                          },
                      },
                      spec);
}

void check_spec(const Mdp& m, const TransformSpec& spec) {
    const std::size_t n = m.num_states();
    const std::size_t k = m.num_actions();
    std::visit(
        Overloaded{
            [](const Identity&) {},
            [&](const PotentialShaping& p) {
                if (p.potential.size() != n) throw ContractError("potential has wrong length");
                for (StateId s = 0; s < n; ++s) {
                    if (!std::isfinite(p.potential[s])) throw ContractError("potential not finite");
                    if (m.is_terminal(s) && std::abs(p.potential[s]) > kSpecTol)
                        throw ContractError("potential nonzero at terminal state " +
                                            std::to_string(s));
                    if (p.k_initial && m.is_initial(s) &&
                        std::abs(p.potential[s] - *p.k_initial) > kSpecTol)
                        throw ContractError("potential differs from k at initial state " +
                                            std::to_string(s));
                }
            },
            [&](const SPrimeRedistribution& r) {
                if (!same_shape(m, r.delta)) throw ContractError("delta has wrong shape");
                for (StateId s = 0; s < n; ++s)
                    for (ActionId a = 0; a < k; ++a)
                        if (std::abs(row_expectation(m.tau().row(s, a), r.delta.row(s, a))) >
                            kRedistributionTol)
                            throw ContractError("delta changes the expected reward of (" +
                                                std::to_string(s) + "," + std::to_string(a) + ")");
            },
            [](const PositiveLinearScaling& c) {
                if (!(c.c > 0.0) || !std::isfinite(c.c))
                    throw ContractError("scale must be positive");
            },
            [](const ZeroPreservingMonotone& f) {
                const auto& b = f.breakpoints;
                if (b.size() < 2) throw ContractError("monotone map needs two breakpoints");
                bool has_zero = false;
                for (std::size_t i = 0; i < b.size(); ++i) {
                    if (b[i].first == 0.0 && b[i].second == 0.0) has_zero = true;
                    if (i > 0 && !(b[i].first > b[i - 1].first && b[i].second > b[i - 1].second))
                        throw ContractError("breakpoints must be strictly increasing");
                }
                if (!has_zero) throw ContractError("monotone map must pass through (0,0)");
            },
            [&](const Mask& x) {
                if (x.transitions.size() != x.replacement.size())
                    throw ContractError("mask replacement size mismatch");
                for (const auto& t : x.transitions)
                    if (t.s >= n || t.a >= k || t.next >= n)
                        throw ContractError("mask transition out of range");
                for (double v : x.replacement)
                    if (!std::isfinite(v)) throw ContractError("mask replacement not finite");
            },
            [&](const OptimalityPreserving& o) {
                if (o.optimal.size() != n || o.psi.size() != n || o.gaps.states() != n ||
                    o.gaps.actions() != k || !same_shape(m, o.split))
                    throw ContractError("optimality-preserving spec has wrong shape");
                for (StateId s = 0; s < n; ++s) {
                    if (o.optimal[s].empty())
                        throw ContractError("empty optimal set at state " + std::to_string(s));
                    for (ActionId a = 0; a < k; ++a) {
                        const bool in = std::find(o.optimal[s].begin(), o.optimal[s].end(), a) !=
                                        o.optimal[s].end();
                        if (in ? o.gaps(s, a) != 0.0 : !(o.gaps(s, a) > 0.0))
                            throw ContractError("gap must be zero exactly on the optimal set");
                        if (std::abs(row_expectation(m.tau().row(s, a), o.split.row(s, a))) >
                            kRedistributionTol)
                            throw ContractError("split changes an expected reward");
                    }
                    for (ActionId a : o.optimal[s])
                        if (a >= k) throw ContractError("optimal action out of range");
                }
            },
        },
        spec);
}

Table3 apply_transform(const Mdp& m, const TransformSpec& spec) {
    check_spec(m, spec);
    const std::size_t n = m.num_states();
    const std::size_t k = m.num_actions();
    Table3 r = m.reward();
    std::visit(Overloaded{
                   [](const Identity&) {},
                   [&](const PotentialShaping& p) {
                       for (StateId s = 0; s < n; ++s)
                           for (ActionId a = 0; a < k; ++a)
                               for (StateId t = 0; t < n; ++t)
                                   r(s, a, t) += m.gamma() * p.potential[t] - p.potential[s];
                   },
                   [&](const SPrimeRedistribution& d) {
                       for (std::size_t i = 0; i < r.size(); ++i) r.flat()[i] += d.delta.flat()[i];
                   },
                   [&](const PositiveLinearScaling& c) {
                       for (double& x : r.flat()) x *= c.c;
                   },
                   [&](const ZeroPreservingMonotone& f) {
                       for (double& x : r.flat()) x = f(x);
                   },
                   [&](const Mask& x) {
                       for (std::size_t i = 0; i < x.transitions.size(); ++i) {
                           const auto& t = x.transitions[i];
                           r(t.s, t.a, t.next) = x.replacement[i];
                       }
                   },
                   [&](const OptimalityPreserving& o) {
                       for (StateId s = 0; s < n; ++s)
                           for (ActionId a = 0; a < k; ++a) {
                               const auto p = m.tau().row(s, a);
                               const double e = o.psi[s] -
                                                m.gamma() * row_expectation(p, o.psi) -
                                                o.gaps(s, a);
                               for (StateId t = 0; t < n; ++t) r(s, a, t) = e + o.split(s, a, t);
                           }
                   },
               },
               spec);
    return r;
}

Mdp apply_chain(const Mdp& m, const TransformChain& chain) {
    Mdp cur = m;
    for (const auto& spec : chain) cur = cur.with_reward(apply_transform(cur, spec));
    return cur;
}

std::string_view class_tag(TransformClass c) {
    switch (c) {
    case TransformClass::Identity: return "identity";
    case TransformClass::ZeroInitialShaping: return "zero_initial_shaping";
    case TransformClass::KInitialShaping: return "k_initial_shaping";
    case TransformClass::PotentialShaping: return "potential_shaping";
    case TransformClass::SPrimeRedistribution: return "sprime_redistribution";
    case TransformClass::PositiveLinearScaling: return "positive_linear_scaling";
    case TransformClass::ZeroPreservingMonotone: return "zero_preserving_monotone";
    case TransformClass::OptimalityPreservingAll: return "optimality_preserving_all";
    case TransformClass::OptimalityPreservingSupported: return "optimality_preserving_supported";
    case TransformClass::ImpossibleMask: return "impossible_mask";
    case TransformClass::UnreachableMask: return "unreachable_mask";
    }
    return "unknown";
}

std::optional<TransformClass> parse_class(std::string_view tag) {
    for (TransformClass c : kAllClasses)
        if (class_tag(c) == tag) return c;
    return std::nullopt;
}

SampledTransform sample_transform(TransformClass cls, const Mdp& m, std::uint64_t seed,
                                  const SampleOptions& options) {
    Rng rng(seed);
    const double mag = options.magnitude;
    const std::size_t n = m.num_states();
    SampledTransform out{Identity{}, true, {}};

    auto shaping = [&](bool zero_initial, std::optional<double> k) {
        PotentialShaping p;
        p.potential.assign(n, 0.0);
        for (StateId s = 0; s < n; ++s) {
            if (m.is_terminal(s)) continue;
            if (m.is_initial(s) && k) p.potential[s] = *k;
            else if (!(zero_initial && m.is_initial(s))) p.potential[s] = rng.uniform(-mag, mag);
        }
        if (zero_initial) p.k_initial = 0.0;
        else if (k) p.k_initial = k;
        return p;
    };

    switch (cls) {
    case TransformClass::Identity:
        break;
    case TransformClass::ZeroInitialShaping: {
        out.spec = shaping(true, std::nullopt);
        bool free_state = false;
        for (StateId s = 0; s < n; ++s) free_state |= !m.is_initial(s) && !m.is_terminal(s);
        if (options.strict && !free_state) {
            out.nondegenerate = false;
            out.notice = "no non-initial, non-terminal state to shape";
        }
        break;
    }
    case TransformClass::KInitialShaping: {
        bool initial_terminal = false;
        for (StateId s = 0; s < n; ++s) initial_terminal |= m.is_initial(s) && m.is_terminal(s);
        double k = 0.0;
        if (!initial_terminal) {
            k = options.strict ? rng.uniform(0.2, 1.0) * mag * (rng.bernoulli(0.5) ? 1 : -1)
                               : rng.uniform(-mag, mag);
        } else if (options.strict) {
            out.nondegenerate = false;
            out.notice = "an initial state is terminal, so k must be 0";
        }
        out.spec = shaping(false, k);
        break;
    }
    case TransformClass::PotentialShaping: {
        out.spec = shaping(false, std::nullopt);
        std::size_t free_initial = 0;
        for (StateId s = 0; s < n; ++s) free_initial += m.is_initial(s) && !m.is_terminal(s);
        if (options.strict && free_initial < 2) {
            out.nondegenerate = false;
            out.notice = "fewer than two non-terminal initial states; shaping is k-initial";
        }
        break;
    }
    case TransformClass::SPrimeRedistribution: {
        Table3 d = random_table(m, rng, mag);
        center_rows(m, d);
        out.spec = SPrimeRedistribution{std::move(d)};
        if (options.strict && !stochastic_row_exists(m)) {
            out.nondegenerate = false;
            out.notice = "dynamics are deterministic; redistribution is an impossible mask";
        }
        break;
    }
    case TransformClass::PositiveLinearScaling: {
        double c = 1.0;
        do c = rng.log_uniform_factor(std::log(5.0));
        while (options.strict && std::abs(std::log(c)) < 0.2);
        out.spec = PositiveLinearScaling{c};
        break;
    }
    case TransformClass::ZeroPreservingMonotone: {
        const auto values = distinct_nonzero(m.reward());
        ZeroPreservingMonotone f = random_monotone(values, rng);
        if (options.strict) {
            if (values.size() < 2) {
                out.nondegenerate = false;
                out.notice = "fewer than two nonzero reward values; every map acts linearly";
            } else {
                for (int attempt = 0; attempt < 1000 && nonlinearity(f, values) < std::exp(0.2);
                     ++attempt)
                    f = random_monotone(values, rng);
                if (nonlinearity(f, values) < std::exp(0.2)) {
                    out.nondegenerate = false;
                    out.notice = "could not draw a nonlinear map";
                }
            }
        }
        out.spec = std::move(f);
        break;
    }
    case TransformClass::OptimalityPreservingAll: {
        const ValueTables opt = optimal_q(m, options.solver);
        out.spec = optimality_preserving(
            m, opt, optimal_action_sets(opt, tie_tolerance(m, options.solver)), rng, mag);
        break;
    }
    case TransformClass::OptimalityPreservingSupported: {
        const ValueTables opt = optimal_q(m, options.solver);
        ActionSets sets = optimal_action_sets(opt, tie_tolerance(m, options.solver));
        const Policy pi = uniform_over(sets, m.num_actions());
        const StateFlags supported = *reachability(m, &pi).supported_states;
        std::vector<StateId> outside;
        for (StateId s = 0; s < n; ++s)
            if (!supported[s]) outside.push_back(s);
        const auto original = sets;
        for (StateId s : outside) sets[s] = random_subset(m.num_actions(), rng);
        if (options.strict) {
            if (outside.empty() || m.num_actions() < 2) {
                out.nondegenerate = false;
                out.notice = "every state is supported by the optimal policy";
            } else {
                const StateId s = outside[rng.index(outside.size())];
                while (sets[s] == original[s]) sets[s] = random_subset(m.num_actions(), rng);
            }
        }
        out.spec = optimality_preserving(m, opt, std::move(sets), rng, mag);
        break;
    }
    case TransformClass::ImpossibleMask: {
        const auto part = classify_transitions(m);
        if (part.impossible.empty()) {
            out.nondegenerate = false;
            out.notice = "no impossible transitions";
            break;
        }
        out.spec = random_mask(part.impossible, rng, mag, {});
        break;
    }
    case TransformClass::UnreachableMask: {
        const auto unreachable = unreachable_transitions(m);
        const auto reach = reachability(m);
        std::vector<Transition> required;
        for (const auto& t : unreachable)
            if (!reach.reachable(t.s) && m.possible(t.s, t.a, t.next)) required.push_back(t);
        if (unreachable.empty() || (options.strict && required.empty())) {
            out.nondegenerate = false;
            out.notice = unreachable.empty() ? "no unreachable transitions"
                                             : "no possible transition from an unreachable state";
            if (unreachable.empty()) break;
        }
        out.spec = random_mask(unreachable, rng, mag, options.strict ? required : std::vector<Transition>{});
        break;
    }
    }
    return out;
}

double membership_tolerance(const Table3& r1, const Table3& r2) {
    return 1e-8 * (1.0 + std::max(r1.max_abs(), r2.max_abs()));
}

bool is_sprime_redistribution(const Mdp& m, const Table3& r1, const Table3& r2,
                              std::optional<double> tol) {
    if (!same_shape(m, r1) || !same_shape(m, r2)) throw ContractError("reward shape mismatch");
    const double eps = tol.value_or(membership_tolerance(r1, r2));
    const Table2 e1 = expected_rewards(m.tau(), r1);
    const Table2 e2 = expected_rewards(m.tau(), r2);
    for (std::size_t i = 0; i < e1.flat().size(); ++i)
        if (std::abs(e1.flat()[i] - e2.flat()[i]) > eps) return false;
    return true;
}

std::optional<ShapingDecomposition> decompose_shaping(const Mdp& m, const Table3& r1,
                                                      const Table3& r2, ShapingScope scope,
                                                      std::optional<double> tol) {
    if (!same_shape(m, r1) || !same_shape(m, r2)) throw ContractError("reward shape mismatch");
    const double eps = tol.value_or(membership_tolerance(r1, r2));
    const std::size_t n = m.num_states();
    std::vector<Transition> in_scope;
    if (scope == ShapingScope::All) {
        for (StateId s = 0; s < n; ++s)
            for (ActionId a = 0; a < m.num_actions(); ++a)
                for (StateId t = 0; t < n; ++t) in_scope.push_back({s, a, t});
    } else {
        in_scope = reachability(m).reachable_transitions;
    }
    std::size_t terminals = 0;
    for (StateId s = 0; s < n; ++s) terminals += m.is_terminal(s);
    const auto rows = static_cast<Eigen::Index>(in_scope.size() + terminals);
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(rows, static_cast<Eigen::Index>(n));
    Eigen::VectorXd b = Eigen::VectorXd::Zero(rows);
    Eigen::Index row = 0;
    for (const auto& t : in_scope) {
        a(row, static_cast<Eigen::Index>(t.next)) += m.gamma();
        a(row, static_cast<Eigen::Index>(t.s)) -= 1.0;
        b(row) = r2(t.s, t.a, t.next) - r1(t.s, t.a, t.next);
        ++row;
    }
    for (StateId s = 0; s < n; ++s)
        if (m.is_terminal(s)) a(row++, static_cast<Eigen::Index>(s)) = 1.0;
    const Eigen::VectorXd phi = a.completeOrthogonalDecomposition().solve(b);
    ShapingDecomposition out;
    out.residual = rows == 0 ? 0.0 : (a * phi - b).lpNorm<Eigen::Infinity>();
    if (!(out.residual <= eps)) return std::nullopt;
    out.potential.assign(phi.data(), phi.data() + phi.size());
    const auto initial = m.initial_states();
    bool constant = true;
    for (StateId s : initial)
        constant &= std::abs(out.potential[s] - out.potential[initial.front()]) <= eps;
    if (constant && !initial.empty()) out.k_initial = out.potential[initial.front()];
    for (StateId s = 0; s < n; ++s)
        for (ActionId act = 0; act < m.num_actions(); ++act)
            for (StateId t = 0; t < n; ++t) {
                const double shaped = m.gamma() * out.potential[t] - out.potential[s];
                if (std::abs(r2(s, act, t) - r1(s, act, t) - shaped) > eps)
                    out.masked.push_back({s, act, t});
            }
    return out;
}

bool is_optimality_preserving(const Mdp& m, const Table3& r2, const ActionSets& optimal,
                              const SolverParams& params, std::optional<double> tol) {
    if (optimal.size() != m.num_states()) throw ContractError("optimal sets have wrong length");
    for (const auto& o : optimal)
        if (o.empty()) throw ContractError("optimal set is empty");
    const Mdp m2 = m.with_reward(r2);
    const ValueTables v = optimal_q(m2, params);
    const double eps = tol.value_or(1e-8 * (1.0 + r2.max_abs()));
    for (StateId s = 0; s < m.num_states(); ++s)
        for (ActionId a = 0; a < m.num_actions(); ++a) {
            // q(s,a) - Psi(s) with Psi = V*' is the slack of the inequality
            const double slack = v.q(s, a) - v.v[s];
            if (slack > eps) return false;
            const bool tight = std::abs(slack) <= eps;
            const bool in = std::find(optimal[s].begin(), optimal[s].end(), a) != optimal[s].end();
            if (tight != in) return false;
        }
    return true;
}

bool is_zero_preserving_monotone(const Table3& r1, const Table3& r2, std::optional<double> tol) {
    if (r1.size() != r2.size()) throw ContractError("reward shape mismatch");
    const double eps = tol.value_or(membership_tolerance(r1, r2));
    std::vector<std::pair<double, double>> pairs{{0.0, 0.0}};
    for (std::size_t i = 0; i < r1.size(); ++i) pairs.emplace_back(r1.flat()[i], r2.flat()[i]);
    std::sort(pairs.begin(), pairs.end());
    for (std::size_t i = 1; i < pairs.size(); ++i) {
        const auto& [x0, y0] = pairs[i - 1];
        const auto& [x1, y1] = pairs[i];
        if (x1 == x0) {
            if (std::abs(y1 - y0) > eps) return false;
        } else if (!(y1 > y0 + eps)) {
            return false;
        }
    }
    return true;
}

std::optional<double> positive_scaling_factor(const Table3& r1, const Table3& r2,
                                              std::optional<double> tol) {
    if (r1.size() != r2.size()) throw ContractError("reward shape mismatch");
    const double eps = tol.value_or(membership_tolerance(r1, r2));
    const auto& f1 = r1.flat();
    const auto& f2 = r2.flat();
    const std::size_t pivot = static_cast<std::size_t>(
        std::max_element(f1.begin(), f1.end(),
                         [](double a, double b) { return std::abs(a) < std::abs(b); }) -
        f1.begin());
    const double c = f1[pivot] == 0.0 ? 1.0 : f2[pivot] / f1[pivot];
    if (!(c > 0.0)) return std::nullopt;
    for (std::size_t i = 0; i < f1.size(); ++i)
        if (std::abs(f2[i] - c * f1[i]) > eps) return std::nullopt;
    return c;
}

Table3 transfer_redistribution(const Mdp& m, const TransferTarget& target) {
    const std::size_t n = m.num_states();
    const std::size_t k = m.num_actions();
    if (!same_shape(m, target.tau_prime)) throw ContractError("tau' has wrong shape");
    if (target.targets.size() != n * k) throw ContractError("targets have wrong length");
    require_valid(m.with_tau(target.tau_prime));
    Table3 r2 = m.reward();
    for (StateId s = 0; s < n; ++s)
        for (ActionId a = 0; a < k; ++a) {
            const auto p = m.tau().row(s, a);
            const auto q = target.tau_prime.row(s, a);
            bool differs = false;
            for (StateId t = 0; t < n; ++t) differs |= std::abs(p[t] - q[t]) > kSpecTol;
            const auto want = target.target(s, a);
            if (want && !std::isfinite(*want)) throw ContractError("target is not finite");
            if (!differs) {
                if (want)
                    throw ContractError("target given for (" + std::to_string(s) + "," +
                                        std::to_string(a) + ") but tau and tau' agree there");
                continue;
            }
            if (!want) continue;
            const auto r1 = m.reward().row(s, a);
            // Smallest d with p.d = 0 and q.d = L - q.R1 lies in span{p, q}.
            const double pp = std::inner_product(p.begin(), p.end(), p.begin(), 0.0);
            const double pq = std::inner_product(p.begin(), p.end(), q.begin(), 0.0);
            const double qq = std::inner_product(q.begin(), q.end(), q.begin(), 0.0);
            const double det = pp * qq - pq * pq;
            if (!(det > 1e-14)) throw ContractError("tau and tau' rows are linearly dependent");
            const double rhs = *want - std::inner_product(q.begin(), q.end(), r1.begin(), 0.0);
            const double yp = -pq * rhs / det;
            const double yq = pp * rhs / det;
            auto out = r2.row(s, a);
            for (StateId t = 0; t < n; ++t) out[t] = r1[t] + yp * p[t] + yq * q[t];
        }
    return r2;
}

} // namespace ril
