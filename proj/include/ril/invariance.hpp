#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ril/json_io.hpp"
#include "ril/kernels.hpp"
#include "ril/objects.hpp"
#include "ril/sampler.hpp"
#include "ril/transforms.hpp"

namespace ril {

/// Shared knobs of every sampled experiment. All randomness comes from
/// `seed`; trial i of a cell draws from derive_seed(seed, cell stream, i).
struct ExperimentParams {
    std::uint64_t seed = 20240601;
    MdpSamplerConfig sampler{};
    ObjectParams objects{};
    double magnitude = 1.0;
    /// Fan-out of trials; verdicts do not depend on it.
    Backend backend = Backend::Parallel;
};

enum class VerdictStatus { Invariant, CounterexampleFound, Skipped };
std::string_view status_tag(VerdictStatus s);

/// A (MDP, transformation) pair that changes a fingerprint.
struct Witness {
    ObjectKind kind{};
    std::size_t trial = 0;
    std::uint64_t mdp_seed = 0;
    std::uint64_t transform_seed = 0;
    Mdp mdp;
    TransformChain chain;
    PayloadDiff diff;
};

struct InvarianceVerdict {
    ObjectKind kind{};
    TransformClass cls{};
    VerdictStatus status = VerdictStatus::Skipped;
    /// Draws whose transformation was a genuine class member.
    std::size_t trials_run = 0;
    std::size_t draws = 0;
    std::optional<Witness> witness;
    std::string reason;
};

/// Payload match. The lottery order is a vNM utility class, so its payloads
/// match when one is a positive affine image of the other.
PayloadDiff fingerprints_match(const ObjectFingerprint& a, const ObjectFingerprint& b);

/// Samples `trials` members of cls (on fixture when given, else on sampled
/// MDPs) and reports whether kind's fingerprint survives all of them.
InvarianceVerdict check_invariance(ObjectKind kind, TransformClass cls,
                                   const ExperimentParams& params, std::size_t trials,
                                   const Mdp* fixture = nullptr);

struct SearchResult {
    std::optional<Witness> witness;
    std::size_t trials_run = 0;
    std::size_t draws = 0;
    std::size_t degenerate = 0;
};

/// Strict draws from cls until a fingerprint changes or `budget` genuine
/// draws are spent.
SearchResult search_counterexample(ObjectKind kind, TransformClass cls,
                                   const ExperimentParams& params, std::size_t budget,
                                   const Mdp* fixture = nullptr);

/// Outcome counts of sampling members of cls on one fixed MDP.
struct FixtureSampleStats {
    std::size_t changed = 0;
    std::size_t unchanged = 0;
    std::size_t degenerate = 0;
    std::optional<Witness> first_change;
};

FixtureSampleStats sample_on_fixture(ObjectKind kind, TransformClass cls, const Mdp& fixture,
                                     const ExperimentParams& params, std::size_t samples,
                                     bool strict);

/// Re-applies the chain to the stored MDP and recomputes the diff.
PayloadDiff replay_witness(const Witness& w, const ObjectParams& params);

/// Members of a kind's proven invariance class. Each trial applies one
/// component or the whole chain to a sampled MDP; fixture moves apply a
/// transformation to a specific MDP where it is known to be harmless.
struct InvarianceGenerator {
    std::vector<TransformClass> chain;
    struct FixtureMove {
        Mdp mdp;
        TransformClass cls;
        bool strict;
    };
    std::vector<FixtureMove> fixture_moves;
};

InvarianceGenerator invariance_generator(ObjectKind kind);

/// One draw from the generator of `kind`.
struct GeneratorDraw {
    Mdp mdp;
    TransformChain chain;
    std::uint64_t mdp_seed = 0;
    std::uint64_t transform_seed = 0;
};

GeneratorDraw generator_draw(ObjectKind kind, const ExperimentParams& params, std::size_t trial);

enum class Refinement { ARefinesB, BRefinesA, Equivalent, Incomparable };
std::string_view refinement_tag(Refinement r);

struct RefinementVerdict {
    ObjectKind a{};
    ObjectKind b{};
    Refinement relation = Refinement::Equivalent;
    /// A generator draw that keeps A and changes B; present unless A refines B.
    std::optional<Witness> keeps_a_changes_b;
    std::optional<Witness> keeps_b_changes_a;
    std::size_t trials = 0;
};

RefinementVerdict refinement_compare(ObjectKind a, ObjectKind b, const ExperimentParams& params,
                                     std::size_t trials);

struct ComplementaryAmbiguity {
    RefinementVerdict refinement;
    /// Both witnesses also change the joint (A, B) fingerprint.
    bool confirmed = false;
};

/// Throws ContractError unless A and B are incomparable.
ComplementaryAmbiguity complementary_ambiguity_check(ObjectKind a, ObjectKind b,
                                                     const ExperimentParams& params,
                                                     std::size_t trials);

/// preserved[i][j]: every draw from generator i kept kind j's fingerprint.
struct PreservationMatrix {
    std::vector<ObjectKind> kinds;
    std::vector<std::vector<bool>> preserved;
    /// First draw of generator i that changed kind j.
    std::vector<std::vector<std::optional<Witness>>> breaks;
    std::size_t trials = 0;
};

PreservationMatrix preservation_matrix(const std::vector<ObjectKind>& kinds,
                                       const ExperimentParams& params, std::size_t trials);

struct HasseDiagram {
    /// Equivalence classes, each listed in roster order.
    std::vector<std::vector<ObjectKind>> groups;
    /// Transitively reduced strict refinements between groups (from, to).
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    /// Group pairs with no refinement either way.
    std::vector<std::pair<std::size_t, std::size_t>> incomparable;
    /// Strict relation failed to be acyclic or transitive.
    std::vector<std::string> audit_failures;
};

HasseDiagram hasse_from_matrix(const PreservationMatrix& m);
HasseDiagram hasse_edges(const std::vector<ObjectKind>& kinds, const ExperimentParams& params,
                         std::size_t trials);

std::string group_label(const std::vector<ObjectKind>& group);
std::string to_dot(const HasseDiagram& h);

/// Expected arrow set, grouped the same way.
struct ExpectedOrder {
    std::vector<std::pair<std::string, std::vector<ObjectKind>>> groups;
    std::vector<std::pair<std::string, std::string>> edges;
};

ExpectedOrder expected_order();

struct OrderDiff {
    std::vector<std::string> problems;
    bool matches() const { return problems.empty(); }
};

/// Compares groups and edges on the kinds present in h.
OrderDiff compare_order(const HasseDiagram& h, const ExpectedOrder& expected);

enum class Mark { Inv, InvSpecial, Not, Mixed, Blank };
std::string_view mark_tag(Mark m);
std::optional<Mark> parse_mark(std::string_view tag);

struct TableRow {
    std::string name;
    std::vector<ObjectKind> kinds;
    std::vector<Mark> marks;
};

struct DirectoryTable {
    std::vector<TransformClass> columns;
    std::vector<TableRow> rows;
};

DirectoryTable expected_directory_table();

struct TableConfig {
    ExperimentParams params{};
    std::size_t trials = 100;
    std::size_t budget = 200;
    std::size_t mixed_samples = 50;
    /// Row names to run; empty runs every row.
    std::vector<std::string> rows;
    /// Column tags to run; empty runs every column.
    std::vector<TransformClass> columns;
};

struct MixedOutcome {
    std::string mdp;
    std::string expectation;
    FixtureSampleStats stats;
    bool met = false;
};

struct CellResult {
    std::string row;
    TransformClass column{};
    Mark expected{};
    std::vector<InvarianceVerdict> verdicts;
    std::vector<MixedOutcome> mixed;
    bool match = true;
    std::string observed;
};

struct TableReport {
    std::vector<CellResult> cells;
    std::size_t diffs() const;
};

TableReport reproduce_directory_table(const TableConfig& config);

Json witness_to_json(const Witness& w);
Witness witness_from_json(const Json& j);
Json verdict_to_json(const InvarianceVerdict& v);
Json refinement_to_json(const RefinementVerdict& v);
Json table_report_to_json(const TableReport& r);
Json hasse_to_json(const HasseDiagram& h);

} // namespace ril
