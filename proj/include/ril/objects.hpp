#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "ril/mdp.hpp"
#include "ril/solvers.hpp"

namespace ril {

enum class ObjectKind {
    Reward,
    QPolicy,
    QStar,
    QSoft,
    BoltzmannPolicy,
    MCEPolicy,
    SupportiveOptimalPolicy,
    TrajDistBoltzmann,
    TrajDistMCE,
    TrajDistOptimal,
    ReturnFragments,
    ReturnTrajectories,
    BoltzmannCmpFragments,
    BoltzmannCmpTrajectories,
    NoiselessCmpFragments,
    NoiselessCmpTrajectories,
    LotteryOrder,
    OptimalPolicySet,
};

inline constexpr ObjectKind kAllKinds[] = {
    ObjectKind::Reward,
    ObjectKind::QPolicy,
    ObjectKind::QStar,
    ObjectKind::QSoft,
    ObjectKind::BoltzmannPolicy,
    ObjectKind::MCEPolicy,
    ObjectKind::SupportiveOptimalPolicy,
    ObjectKind::TrajDistBoltzmann,
    ObjectKind::TrajDistMCE,
    ObjectKind::TrajDistOptimal,
    ObjectKind::ReturnFragments,
    ObjectKind::ReturnTrajectories,
    ObjectKind::BoltzmannCmpFragments,
    ObjectKind::BoltzmannCmpTrajectories,
    ObjectKind::NoiselessCmpFragments,
    ObjectKind::NoiselessCmpTrajectories,
    ObjectKind::LotteryOrder,
    ObjectKind::OptimalPolicySet,
};

std::string_view kind_tag(ObjectKind k);
std::optional<ObjectKind> parse_kind(std::string_view tag);

struct Resolution {
    std::size_t max_fragment_len = 2;
    std::size_t max_prefix = 1;
    std::size_t max_cycle = 2;
    std::size_t cap = kDefaultEnumerationCap;
    friend bool operator==(const Resolution&, const Resolution&) = default;
};

struct ObjectParams {
    SolverParams solver{};
    Resolution resolution{};
    /// Relative payload tolerance; values match when
    /// |a - b| <= tolerance * (1 + max|payload|).
    double tolerance = 1e-8;
};

struct ObjectFingerprint {
    ObjectKind kind{};
    Resolution resolution{};
    /// Real payload in enumeration order.
    std::vector<double> values;
    /// Index set the payload is restricted to (states for trajectory
    /// distributions); compared exactly.
    std::vector<std::size_t> keys;
    /// Ordered-relation payload; compared exactly.
    std::vector<std::uint8_t> relation;
    double tolerance = 1e-8;
};

struct PayloadDiff {
    bool equal = true;
    /// Where the first mismatch sits; "keys", "relation", "values" or "shape".
    std::string_view part;
    std::size_t index = 0;
    double magnitude = 0.0;
};

/// Literal comparison: same kind and resolution, equal keys and relation,
/// values within tolerance.
PayloadDiff compare_payloads(const ObjectFingerprint& a, const ObjectFingerprint& b);

/// Lazily computes and caches every ingredient a fingerprint needs, so that
/// many kinds of one MDP share solves and enumerations.
class ObjectContext {
public:
    ObjectContext(Mdp m, ObjectParams params);
    ~ObjectContext();
    ObjectContext(ObjectContext&&) noexcept;

    const Mdp& mdp() const noexcept;
    ObjectFingerprint fingerprint(ObjectKind kind);

    const ValueTables& optimal();
    const ValueTables& soft();
    const Policy& supportive_optimal();
    const std::vector<Fragment>& fragments();
    const std::vector<LassoTrajectory>& lassos();
    const std::vector<double>& fragment_returns();
    const std::vector<double>& lasso_returns();

private:
    struct Cache;
    std::unique_ptr<Cache> cache_;
};

ObjectFingerprint fingerprint(const Mdp& m, ObjectKind kind, const ObjectParams& params = {});

/// Tie tolerance of the noiseless relations, 1e-9 * (1 + max|R|).
double noiseless_tie_tolerance(const Mdp& m);

/// P(item1 is preferred less than item2) = logistic(beta (G2 - G1)).
double boltzmann_comparison_prob(const Mdp& m, double beta, const Fragment& item1,
                                 const Fragment& item2);
double boltzmann_comparison_prob(const Mdp& m, double beta, const LassoTrajectory& item1,
                                 const LassoTrajectory& item2);

struct Relation {
    bool le;
    bool ge;
    friend bool operator==(const Relation&, const Relation&) = default;
};

Relation noiseless_compare(const Mdp& m, const Fragment& item1, const Fragment& item2);
Relation noiseless_compare(const Mdp& m, const LassoTrajectory& item1,
                           const LassoTrajectory& item2);

using Lottery = std::vector<std::pair<double, LassoTrajectory>>;

double expected_return(const Mdp& m, const Lottery& d);
Relation lottery_compare(const Mdp& m, const Lottery& d1, const Lottery& d2);

/// Answers P(z1 <= z2) for two fragments.
using ComparisonOracle = std::function<double(const Fragment&, const Fragment&)>;

struct PartialReward {
    Table3 values;
    /// Entry i of values is meaningful only when known[i].
    std::vector<bool> known;
};

/// Reads R(s,a,s') off the comparison of (s) with (s,a,s') as
/// (1/beta) log(p / (1 - p)). Impossible transitions stay unknown.
PartialReward recover_reward_from_comparisons(const ComparisonOracle& oracle, double beta,
                                              const Mdp& m);

} // namespace ril
