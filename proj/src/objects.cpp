#include "ril/objects.hpp"

#include <algorithm>
#include <cmath>

#include "ril/errors.hpp"
#include "ril/kernels.hpp"

namespace ril {

std::string_view kind_tag(ObjectKind k) {
    switch (k) {
    case ObjectKind::Reward: return "reward";
    case ObjectKind::QPolicy: return "q_policy";
    case ObjectKind::QStar: return "q_star";
    case ObjectKind::QSoft: return "q_soft";
    case ObjectKind::BoltzmannPolicy: return "boltzmann_policy";
    case ObjectKind::MCEPolicy: return "mce_policy";
    case ObjectKind::SupportiveOptimalPolicy: return "supportive_optimal_policy";
    case ObjectKind::TrajDistBoltzmann: return "traj_dist_boltzmann";
    case ObjectKind::TrajDistMCE: return "traj_dist_mce";
    case ObjectKind::TrajDistOptimal: return "traj_dist_optimal";
    case ObjectKind::ReturnFragments: return "return_fragments";
    case ObjectKind::ReturnTrajectories: return "return_trajectories";
    case ObjectKind::BoltzmannCmpFragments: return "boltzmann_cmp_fragments";
    case ObjectKind::BoltzmannCmpTrajectories: return "boltzmann_cmp_trajectories";
    case ObjectKind::NoiselessCmpFragments: return "noiseless_cmp_fragments";
    case ObjectKind::NoiselessCmpTrajectories: return "noiseless_cmp_trajectories";
    case ObjectKind::LotteryOrder: return "lottery_order";
    case ObjectKind::OptimalPolicySet: return "optimal_policy_set";
    }
    return "unknown";
}

std::optional<ObjectKind> parse_kind(std::string_view tag) {
    for (ObjectKind k : kAllKinds)
        if (kind_tag(k) == tag) return k;
    return std::nullopt;
}

PayloadDiff compare_payloads(const ObjectFingerprint& a, const ObjectFingerprint& b) {
    if (a.kind != b.kind || !(a.resolution == b.resolution) || a.values.size() != b.values.size() ||
        a.relation.size() != b.relation.size())
        return {false, "shape", 0, INFINITY};
    if (a.keys != b.keys) {
        std::size_t i = 0;
        while (i < std::min(a.keys.size(), b.keys.size()) && a.keys[i] == b.keys[i]) ++i;
        return {false, "keys", i, 1.0};
    }
    for (std::size_t i = 0; i < a.relation.size(); ++i)
        if (a.relation[i] != b.relation[i]) return {false, "relation", i, 1.0};
    double scale = 0.0;
    for (double x : a.values) scale = std::max(scale, std::abs(x));
    for (double x : b.values) scale = std::max(scale, std::abs(x));
    const double tol = std::max(a.tolerance, b.tolerance) * (1.0 + scale);
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        const double d = std::abs(a.values[i] - b.values[i]);
        if (!(d <= tol)) return {false, "values", i, d};
    }
    return {};
}

struct ObjectContext::Cache {
    Cache(Mdp mdp, ObjectParams params) : m(std::move(mdp)), p(std::move(params)) {}
    Mdp m;
    ObjectParams p;
    std::optional<ValueTables> optimal{};
    std::optional<ValueTables> soft{};
    std::optional<Policy> supportive{};
    std::optional<std::vector<Fragment>> fragments{};
    std::optional<std::vector<LassoTrajectory>> lassos{};
    std::optional<std::vector<double>> fragment_returns{};
    std::optional<std::vector<double>> lasso_returns{};
};

ObjectContext::ObjectContext(Mdp m, ObjectParams params)
    : cache_(std::make_unique<Cache>(std::move(m), std::move(params))) {}
ObjectContext::~ObjectContext() = default;
ObjectContext::ObjectContext(ObjectContext&&) noexcept = default;

const Mdp& ObjectContext::mdp() const noexcept { return cache_->m; }

const ValueTables& ObjectContext::optimal() {
    if (!cache_->optimal) cache_->optimal = optimal_q(cache_->m, cache_->p.solver);
    return *cache_->optimal;
}

const ValueTables& ObjectContext::soft() {
    if (!cache_->soft) cache_->soft = soft_q(cache_->m, cache_->p.solver);
    return *cache_->soft;
}

const Policy& ObjectContext::supportive_optimal() {
    if (!cache_->supportive) {
        const auto sets = optimal_action_sets(optimal(), tie_tolerance(cache_->m, cache_->p.solver));
        cache_->supportive = uniform_over(sets, cache_->m.num_actions());
    }
    return *cache_->supportive;
}

const std::vector<Fragment>& ObjectContext::fragments() {
    if (!cache_->fragments) {
        const auto& r = cache_->p.resolution;
        cache_->fragments = enumerate_fragments(cache_->m, r.max_fragment_len, true, false, r.cap);
    }
    return *cache_->fragments;
}

const std::vector<LassoTrajectory>& ObjectContext::lassos() {
    if (!cache_->lassos) {
        const auto& r = cache_->p.resolution;
        cache_->lassos = enumerate_lassos(cache_->m, r.max_prefix, r.max_cycle, r.cap);
    }
    return *cache_->lassos;
}

const std::vector<double>& ObjectContext::fragment_returns() {
    if (!cache_->fragment_returns) {
        std::vector<double> g;
        g.reserve(fragments().size());
        for (const auto& z : fragments()) g.push_back(fragment_return(cache_->m, z));
        cache_->fragment_returns = std::move(g);
    }
    return *cache_->fragment_returns;
}

const std::vector<double>& ObjectContext::lasso_returns() {
    if (!cache_->lasso_returns) {
        std::vector<double> g;
        g.reserve(lassos().size());
        for (const auto& x : lassos()) g.push_back(lasso_return(cache_->m, x));
        cache_->lasso_returns = std::move(g);
    }
    return *cache_->lasso_returns;
}

namespace {

void append(std::vector<double>& out, std::span<const double> xs) {
    out.insert(out.end(), xs.begin(), xs.end());
}

/// Initial distribution followed by the policy rows of the given states.
void trajectory_payload(const Mdp& m, const Policy& pi, const StateFlags& relevant,
                        ObjectFingerprint& fp) {
    append(fp.values, m.mu0());
    for (StateId s = 0; s < m.num_states(); ++s) {
        if (!relevant[s]) continue;
        fp.keys.push_back(s);
        append(fp.values, pi.row(s));
    }
}

std::vector<double> pairwise(Backend b, std::span<const double> g, double beta) {
    std::vector<double> out(triangle_size(g.size()));
    pairwise_logistic(b, g, beta, out);
    return out;
}

std::vector<std::uint8_t> order(Backend b, std::span<const double> g, double tie) {
    std::vector<std::uint8_t> out(triangle_size(g.size()));
    pairwise_order(b, g, tie, out);
    return out;
}

} // namespace

ObjectFingerprint ObjectContext::fingerprint(ObjectKind kind) {
    const Mdp& m = cache_->m;
    const ObjectParams& p = cache_->p;
    const double beta = p.solver.beta;
    const Backend backend = p.solver.backend;
    ObjectFingerprint fp;
    fp.kind = kind;
    fp.resolution = p.resolution;
    fp.tolerance = p.tolerance;
    switch (kind) {
    case ObjectKind::Reward:
        append(fp.values, m.reward().flat());
        break;
    case ObjectKind::QPolicy:
        append(fp.values, policy_q(m, Policy::uniform(m.num_states(), m.num_actions())).q.flat());
        break;
    case ObjectKind::QStar:
        append(fp.values, optimal().q.flat());
        break;
    case ObjectKind::QSoft:
        append(fp.values, soft().q.flat());
        break;
    case ObjectKind::BoltzmannPolicy:
        append(fp.values, boltzmann_rational_policy(optimal(), beta).table().flat());
        break;
    case ObjectKind::MCEPolicy:
        append(fp.values, mce_policy(soft(), beta).table().flat());
        break;
    case ObjectKind::SupportiveOptimalPolicy:
        append(fp.values, supportive_optimal().table().flat());
        break;
    case ObjectKind::TrajDistBoltzmann:
        trajectory_payload(m, boltzmann_rational_policy(optimal(), beta),
                           reachability(m).reachable_states, fp);
        break;
    case ObjectKind::TrajDistMCE:
        trajectory_payload(m, mce_policy(soft(), beta), reachability(m).reachable_states, fp);
        break;
    case ObjectKind::TrajDistOptimal: {
        const Policy& pi = supportive_optimal();
        trajectory_payload(m, pi, *reachability(m, &pi).supported_states, fp);
        break;
    }
    case ObjectKind::ReturnFragments:
        fp.values = fragment_returns();
        break;
    case ObjectKind::ReturnTrajectories:
        fp.values = lasso_returns();
        break;
    case ObjectKind::BoltzmannCmpFragments:
        fp.values = pairwise(backend, fragment_returns(), beta);
        break;
    case ObjectKind::BoltzmannCmpTrajectories:
        fp.values = pairwise(backend, lasso_returns(), beta);
        break;
    case ObjectKind::NoiselessCmpFragments:
        fp.relation = order(backend, fragment_returns(), noiseless_tie_tolerance(m));
        break;
    case ObjectKind::NoiselessCmpTrajectories:
        fp.relation = order(backend, lasso_returns(), noiseless_tie_tolerance(m));
        break;
    case ObjectKind::LotteryOrder: {
        // point masses on each lasso, then even mixtures of neighbours
        const auto& g = lasso_returns();
        fp.values = g;
        for (std::size_t i = 0; i + 1 < g.size(); ++i) fp.values.push_back(0.5 * g[i] + 0.5 * g[i + 1]);
        break;
    }
    case ObjectKind::OptimalPolicySet: {
        const Policy& pi = supportive_optimal();
        for (double x : pi.table().flat()) fp.relation.push_back(x > 0.0 ? 1 : 0);
        break;
    }
    }
    return fp;
}

ObjectFingerprint fingerprint(const Mdp& m, ObjectKind kind, const ObjectParams& params) {
    return ObjectContext(m, params).fingerprint(kind);
}

double noiseless_tie_tolerance(const Mdp& m) { return 1e-9 * (1.0 + m.max_abs_reward()); }

namespace {

void require_item(const Mdp& m, const Fragment& z) {
    if (!is_possible(m, z)) throw ContractError("comparison item is an impossible fragment");
}

void require_item(const Mdp& m, const LassoTrajectory& x) {
    if (!is_possible(m, x.prefix) || !is_possible(m, x.cycle))
        throw ContractError("comparison item is an impossible trajectory");
    if (!is_initial(m, x.prefix)) throw ContractError("comparison item is not an initial trajectory");
}

Relation relation_of(double g1, double g2, double tie) {
    if (std::abs(g1 - g2) <= tie) return {true, true};
    return {g1 < g2, g1 > g2};
}

} // namespace

double boltzmann_comparison_prob(const Mdp& m, double beta, const Fragment& item1,
                                 const Fragment& item2) {
    require_item(m, item1);
    require_item(m, item2);
    return logistic(beta * (fragment_return(m, item2) - fragment_return(m, item1)));
}

double boltzmann_comparison_prob(const Mdp& m, double beta, const LassoTrajectory& item1,
                                 const LassoTrajectory& item2) {
    require_item(m, item1);
    require_item(m, item2);
    return logistic(beta * (lasso_return(m, item2) - lasso_return(m, item1)));
}

Relation noiseless_compare(const Mdp& m, const Fragment& item1, const Fragment& item2) {
    require_item(m, item1);
    require_item(m, item2);
    return relation_of(fragment_return(m, item1), fragment_return(m, item2),
                       noiseless_tie_tolerance(m));
}

Relation noiseless_compare(const Mdp& m, const LassoTrajectory& item1,
                           const LassoTrajectory& item2) {
    require_item(m, item1);
    require_item(m, item2);
    return relation_of(lasso_return(m, item1), lasso_return(m, item2), noiseless_tie_tolerance(m));
}

double expected_return(const Mdp& m, const Lottery& d) {
    double total = 0.0, mass = 0.0;
    for (const auto& [w, x] : d) {
        if (!(w >= 0.0)) throw ContractError("lottery weight is negative");
        require_item(m, x);
        total += w * lasso_return(m, x);
        mass += w;
    }
    if (std::abs(mass - 1.0) > kDistributionTol) throw ContractError("lottery weights do not sum to 1");
    return total;
}

Relation lottery_compare(const Mdp& m, const Lottery& d1, const Lottery& d2) {
    return relation_of(expected_return(m, d1), expected_return(m, d2), noiseless_tie_tolerance(m));
}

PartialReward recover_reward_from_comparisons(const ComparisonOracle& oracle, double beta,
                                              const Mdp& m) {
    if (!(beta > 0.0)) throw ContractError("beta must be positive");
    PartialReward out{Table3(m.num_states(), m.num_actions()),
                      std::vector<bool>(m.reward().size(), false)};
    for (StateId s = 0; s < m.num_states(); ++s)
        for (ActionId a = 0; a < m.num_actions(); ++a)
            for (StateId t = 0; t < m.num_states(); ++t) {
                if (!m.possible(s, a, t)) continue;
                const double p = oracle(Fragment{s, {}}, Fragment{s, {{a, t}}});
                if (!(p > 0.0 && p < 1.0))
                    throw ContractError("comparison probability must lie strictly inside (0,1)");
                out.values(s, a, t) = std::log(p / (1.0 - p)) / beta;
                out.known[out.values.index(s, a, t)] = true;
            }
    return out;
}

} // namespace ril
