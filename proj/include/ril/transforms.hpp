#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "ril/mdp.hpp"
#include "ril/solvers.hpp"

namespace ril {

struct Identity {
    friend bool operator==(const Identity&, const Identity&) = default;
};

/// R + gamma Phi(s') - Phi(s). Phi vanishes on terminal states; when
/// k_initial is set, Phi equals k on every initial state.
struct PotentialShaping {
    std::vector<double> potential;
    std::optional<double> k_initial;
    friend bool operator==(const PotentialShaping&, const PotentialShaping&) = default;
};

/// R + delta, where delta has zero tau-expectation on every (s,a).
struct SPrimeRedistribution {
    Table3 delta;
    friend bool operator==(const SPrimeRedistribution&, const SPrimeRedistribution&) = default;
};

struct PositiveLinearScaling {
    double c = 1.0;
    friend bool operator==(const PositiveLinearScaling&, const PositiveLinearScaling&) = default;
};

/// Strictly increasing piecewise-linear map through (0,0), extended linearly
/// past the outer breakpoints.
struct ZeroPreservingMonotone {
    std::vector<std::pair<double, double>> breakpoints;
    double operator()(double x) const;
    friend bool operator==(const ZeroPreservingMonotone&, const ZeroPreservingMonotone&) = default;
};

/// Overwrites the reward on each transition in X.
struct Mask {
    std::vector<Transition> transitions;
    std::vector<double> replacement;
    friend bool operator==(const Mask&, const Mask&) = default;
};

/// Replaces R by rewards whose expectations are
/// Psi(s) - gamma E[Psi(S')] - gap(s,a), with gap zero exactly on O(s), plus
/// a split that has zero expectation under tau.
struct OptimalityPreserving {
    ActionSets optimal;
    std::vector<double> psi;
    Table2 gaps;
    Table3 split;
    friend bool operator==(const OptimalityPreserving&, const OptimalityPreserving&) = default;
};

using TransformSpec = std::variant<Identity, PotentialShaping, SPrimeRedistribution,
                                   PositiveLinearScaling, ZeroPreservingMonotone, Mask,
                                   OptimalityPreserving>;
using TransformChain = std::vector<TransformSpec>;

std::string_view spec_tag(const TransformSpec& spec);

/// Throws ContractError if the spec does not fit m.
void check_spec(const Mdp& m, const TransformSpec& spec);

Table3 apply_transform(const Mdp& m, const TransformSpec& spec);

/// Applies the chain left to right; each step sees the previous result.
Mdp apply_chain(const Mdp& m, const TransformChain& chain);

enum class TransformClass {
    Identity,
    ZeroInitialShaping,
    KInitialShaping,
    PotentialShaping,
    SPrimeRedistribution,
    PositiveLinearScaling,
    ZeroPreservingMonotone,
    OptimalityPreservingAll,
    OptimalityPreservingSupported,
    ImpossibleMask,
    UnreachableMask,
};

inline constexpr TransformClass kAllClasses[] = {
    TransformClass::Identity,
    TransformClass::ZeroInitialShaping,
    TransformClass::KInitialShaping,
    TransformClass::PotentialShaping,
    TransformClass::SPrimeRedistribution,
    TransformClass::PositiveLinearScaling,
    TransformClass::ZeroPreservingMonotone,
    TransformClass::OptimalityPreservingAll,
    TransformClass::OptimalityPreservingSupported,
    TransformClass::ImpossibleMask,
    TransformClass::UnreachableMask,
};

std::string_view class_tag(TransformClass c);
std::optional<TransformClass> parse_class(std::string_view tag);

struct SampleOptions {
    double magnitude = 1.0;
    /// Exclude members of the strictly smaller classes below this one, so a
    /// counterexample search does not waste draws on known invariances.
    bool strict = false;
    SolverParams solver{};
};

struct SampledTransform {
    TransformSpec spec;
    /// False when m admits no member with the requested property; spec is
    /// then a best effort (often Identity) and notice says why.
    bool nondegenerate = true;
    std::string notice;
};

SampledTransform sample_transform(TransformClass cls, const Mdp& m, std::uint64_t seed,
                                  const SampleOptions& options = {});

/// Default membership tolerance 1e-8 * (1 + max|R|).
double membership_tolerance(const Table3& r1, const Table3& r2);

bool is_sprime_redistribution(const Mdp& m, const Table3& r1, const Table3& r2,
                              std::optional<double> tol = {});

enum class ShapingScope { All, Reachable };

struct ShapingDecomposition {
    std::vector<double> potential;
    std::optional<double> k_initial;
    /// Out-of-scope transitions where r2 - r1 differs from the shaping term.
    std::vector<Transition> masked;
    double residual = 0.0;
};

std::optional<ShapingDecomposition> decompose_shaping(const Mdp& m, const Table3& r1,
                                                      const Table3& r2, ShapingScope scope,
                                                      std::optional<double> tol = {});

bool is_optimality_preserving(const Mdp& m, const Table3& r2, const ActionSets& optimal,
                              const SolverParams& params = {}, std::optional<double> tol = {});

bool is_zero_preserving_monotone(const Table3& r1, const Table3& r2,
                                 std::optional<double> tol = {});

std::optional<double> positive_scaling_factor(const Table3& r1, const Table3& r2,
                                              std::optional<double> tol = {});

struct TransferTarget {
    Table3 tau_prime;
    /// Target E_{tau'}[R2(s,a,S')] per (s,a); unset entries keep R1's row.
    std::vector<std::optional<double>> targets;

    std::optional<double> target(StateId s, ActionId a) const {
        return targets[s * tau_prime.actions() + a];
    }
};

/// R2 differs from R1 only on rows where tau and tau' differ. On those rows
/// it keeps the tau-expectation of R1 and meets the tau'-target, using the
/// smallest change R2 - R1 in the Euclidean norm.
Table3 transfer_redistribution(const Mdp& m, const TransferTarget& target);

} // namespace ril
