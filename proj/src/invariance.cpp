#include "ril/invariance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>

#include "embedded_data.hpp"
#include "ril/errors.hpp"
#include "ril/fixtures.hpp"
#include "ril/rng.hpp"

namespace ril {

namespace {

constexpr std::size_t kBlock = 32;

std::uint64_t stream_of(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t cell_stream(ObjectKind kind, TransformClass cls, std::string_view purpose) {
    std::string key(purpose);
    key += '/';
    key += kind_tag(kind);
    key += '/';
    key += class_tag(cls);
    return stream_of(key);
}

// Evaluates draws in fixed blocks and hands them to consume in index order,
// so the outcome never depends on how many workers ran the block.
template <class Outcome, class Eval, class Consume>
void scan_draws(Backend backend, std::size_t max_draws, Eval&& eval, Consume&& consume) {
    for (std::size_t start = 0; start < max_draws; start += kBlock) {
        const std::size_t n = std::min(kBlock, max_draws - start);
        std::vector<std::optional<Outcome>> out(n);
        for_each_trial(backend, n, [&](std::size_t i) { out[i].emplace(eval(start + i)); });
        for (auto& o : out)
            if (!consume(std::move(*o))) return;
    }
}

struct DrawOutcome {
    bool genuine = false;
    std::string notice;
    std::optional<Witness> witness;
};

DrawOutcome evaluate_draw(ObjectKind kind, TransformClass cls, bool strict,
                          const ExperimentParams& p, const Mdp* fixture, std::uint64_t stream,
                          std::size_t index) {
    const std::uint64_t mdp_seed = fixture ? 0 : derive_seed(p.seed, stream, 2 * index);
    const std::uint64_t t_seed = derive_seed(p.seed, stream, 2 * index + 1);
    Mdp m = fixture ? *fixture : sample_mdp(p.sampler, mdp_seed);
    auto s = sample_transform(cls, m, t_seed, {p.magnitude, strict, p.objects.solver});
    DrawOutcome out;
    out.genuine = s.nondegenerate;
    out.notice = std::move(s.notice);
    if (!out.genuine) return out;
    TransformChain chain{std::move(s.spec)};
    const PayloadDiff d = fingerprints_match(fingerprint(m, kind, p.objects),
                                             fingerprint(apply_chain(m, chain), kind, p.objects));
    if (!d.equal) out.witness = Witness{kind, index, mdp_seed, t_seed, std::move(m), std::move(chain), d};
    return out;
}

PayloadDiff mismatch(std::string_view part, std::size_t index, double magnitude) {
    return {false, part, index, magnitude};
}

PayloadDiff affine_match(const ObjectFingerprint& a, const ObjectFingerprint& b) {
    const auto& x = a.values;
    const auto& y = b.values;
    if (x.size() != y.size())
        return mismatch("shape", std::min(x.size(), y.size()), std::numeric_limits<double>::infinity());
    const std::size_t n = x.size();
    if (n == 0) return {};
    auto max_abs = [](const std::vector<double>& v) {
        double m = 0.0;
        for (double e : v) m = std::max(m, std::abs(e));
        return m;
    };
    const double tol_x = a.tolerance * (1.0 + max_abs(x));
    const double tol_y = std::max(a.tolerance, b.tolerance) * (1.0 + max_abs(y));
    const auto [xlo, xhi] = std::minmax_element(x.begin(), x.end());
    if (*xhi - *xlo <= tol_x) {
        for (std::size_t i = 0; i < n; ++i)
            if (std::abs(y[i] - y[0]) > tol_y) return mismatch("affine", i, std::abs(y[i] - y[0]));
        return {};
    }
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    const double c = sxy / sxx;
    const double k = my - c * mx;
    std::size_t worst = 0;
    double err = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = std::abs(y[i] - (c * x[i] + k));
        if (e > err) {
            err = e;
            worst = i;
        }
    }
    // a non-positive slope reverses or flattens the order
    if (!(c * (*xhi - *xlo) > tol_y)) return mismatch("affine", worst, std::max(err, std::abs(c)));
    if (err > tol_y) return mismatch("affine", worst, err);
    return {};
}

std::string_view diff_part_literal(std::string_view s) {
    for (std::string_view p : {"keys", "relation", "values", "shape", "affine", "kind"})
        if (p == s) return p;
    return "values";
}

struct GeneratorOutcome {
    GeneratorDraw draw;
    std::vector<PayloadDiff> diffs;
};

GeneratorOutcome evaluate_generator(ObjectKind gen, const std::vector<ObjectKind>& kinds,
                                    const ExperimentParams& p, std::size_t trial) {
    GeneratorDraw d = generator_draw(gen, p, trial);
    ObjectContext before(d.mdp, p.objects);
    ObjectContext after(apply_chain(d.mdp, d.chain), p.objects);
    std::vector<PayloadDiff> diffs;
    diffs.reserve(kinds.size());
    for (ObjectKind k : kinds) diffs.push_back(fingerprints_match(before.fingerprint(k), after.fingerprint(k)));
    return {std::move(d), std::move(diffs)};
}

Witness generator_witness(ObjectKind changed, std::size_t trial, const GeneratorOutcome& o,
                          const PayloadDiff& d) {
    return Witness{changed, trial, o.draw.mdp_seed, o.draw.transform_seed, o.draw.mdp, o.draw.chain, d};
}

} // namespace

std::string_view status_tag(VerdictStatus s) {
    switch (s) {
    case VerdictStatus::Invariant: return "invariant";
    case VerdictStatus::CounterexampleFound: return "counterexample_found";
    case VerdictStatus::Skipped: return "skipped";
    }
    return "?";
}

std::string_view refinement_tag(Refinement r) {
    switch (r) {
    case Refinement::ARefinesB: return "a_refines_b";
    case Refinement::BRefinesA: return "b_refines_a";
    case Refinement::Equivalent: return "equivalent";
    case Refinement::Incomparable: return "incomparable";
    }
    return "?";
}

PayloadDiff fingerprints_match(const ObjectFingerprint& a, const ObjectFingerprint& b) {
    if (a.kind != b.kind) return mismatch("kind", 0, std::numeric_limits<double>::infinity());
    if (a.kind != ObjectKind::LotteryOrder) return compare_payloads(a, b);
    if (a.keys != b.keys) return mismatch("keys", 0, std::numeric_limits<double>::infinity());
    if (a.relation != b.relation) return mismatch("relation", 0, std::numeric_limits<double>::infinity());
    return affine_match(a, b);
}

InvarianceVerdict check_invariance(ObjectKind kind, TransformClass cls,
                                   const ExperimentParams& params, std::size_t trials,
                                   const Mdp* fixture) {
    if (trials == 0) throw ContractError("trials must be positive");
    InvarianceVerdict v{kind, cls, VerdictStatus::Skipped, 0, 0, std::nullopt, {}};
    const std::uint64_t stream = cell_stream(kind, cls, fixture ? "check-fixture" : "check");
    // odd draws are strict so that masks and shapings are not vacuous
    scan_draws<DrawOutcome>(
        params.backend, trials * 8,
        [&](std::size_t i) { return evaluate_draw(kind, cls, i % 2 == 1, params, fixture, stream, i); },
        [&](DrawOutcome o) {
            ++v.draws;
            if (!o.genuine) {
                if (v.reason.empty()) v.reason = std::move(o.notice);
                return true;
            }
            ++v.trials_run;
            if (o.witness) {
                v.witness = std::move(o.witness);
                return false;
            }
            return v.trials_run < trials;
        });
    if (v.witness) {
        v.status = VerdictStatus::CounterexampleFound;
        v.reason.clear();
    } else if (v.trials_run == 0) {
        v.status = VerdictStatus::Skipped;
    } else {
        v.status = VerdictStatus::Invariant;
        v.reason.clear();
    }
    return v;
}

SearchResult search_counterexample(ObjectKind kind, TransformClass cls,
                                   const ExperimentParams& params, std::size_t budget,
                                   const Mdp* fixture) {
    SearchResult r;
    if (budget == 0) return r;
    const std::uint64_t stream = cell_stream(kind, cls, fixture ? "search-fixture" : "search");
    scan_draws<DrawOutcome>(
        params.backend, budget * 8,
        [&](std::size_t i) { return evaluate_draw(kind, cls, true, params, fixture, stream, i); },
        [&](DrawOutcome o) {
            ++r.draws;
            if (!o.genuine) {
                ++r.degenerate;
                return true;
            }
            ++r.trials_run;
            if (o.witness) {
                r.witness = std::move(o.witness);
                return false;
            }
            return r.trials_run < budget;
        });
    return r;
}

FixtureSampleStats sample_on_fixture(ObjectKind kind, TransformClass cls, const Mdp& fixture,
                                     const ExperimentParams& params, std::size_t samples,
                                     bool strict) {
    FixtureSampleStats st;
    if (samples == 0) return st;
    const std::uint64_t stream = cell_stream(kind, cls, strict ? "fixture-strict" : "fixture");
    scan_draws<DrawOutcome>(
        params.backend, samples * 8,
        [&](std::size_t i) { return evaluate_draw(kind, cls, strict, params, &fixture, stream, i); },
        [&](DrawOutcome o) {
            if (!o.genuine) {
                ++st.degenerate;
                return true;
            }
            if (o.witness) {
                ++st.changed;
                if (!st.first_change) st.first_change = std::move(o.witness);
            } else {
                ++st.unchanged;
            }
            return st.changed + st.unchanged < samples;
        });
    return st;
}

PayloadDiff replay_witness(const Witness& w, const ObjectParams& params) {
    return fingerprints_match(fingerprint(w.mdp, w.kind, params),
                              fingerprint(apply_chain(w.mdp, w.chain), w.kind, params));
}

InvarianceGenerator invariance_generator(ObjectKind kind) {
    using C = TransformClass;
    const auto zpmt_moves = [] {
        return std::vector<InvarianceGenerator::FixtureMove>{
            {fixtures::split(), C::ZeroPreservingMonotone, true},
            {fixtures::zpmt_chain(), C::ZeroPreservingMonotone, false},
        };
    };
    switch (kind) {
    case ObjectKind::Reward: return {{C::Identity}, {}};
    case ObjectKind::QPolicy:
    case ObjectKind::QStar:
    case ObjectKind::QSoft: return {{C::SPrimeRedistribution}, {}};
    case ObjectKind::BoltzmannPolicy:
    case ObjectKind::MCEPolicy: return {{C::SPrimeRedistribution, C::PotentialShaping}, {}};
    case ObjectKind::SupportiveOptimalPolicy:
    case ObjectKind::OptimalPolicySet: return {{C::OptimalityPreservingAll}, {}};
    case ObjectKind::TrajDistBoltzmann:
    case ObjectKind::TrajDistMCE:
        return {{C::UnreachableMask, C::PotentialShaping, C::SPrimeRedistribution}, {}};
    case ObjectKind::TrajDistOptimal: return {{C::OptimalityPreservingSupported}, {}};
    case ObjectKind::ReturnFragments:
    case ObjectKind::BoltzmannCmpFragments: return {{C::ImpossibleMask}, {}};
    case ObjectKind::ReturnTrajectories: return {{C::UnreachableMask, C::ZeroInitialShaping}, {}};
    case ObjectKind::BoltzmannCmpTrajectories: return {{C::UnreachableMask, C::KInitialShaping}, {}};
    case ObjectKind::NoiselessCmpFragments:
        return {{C::ImpossibleMask, C::PositiveLinearScaling}, zpmt_moves()};
    case ObjectKind::NoiselessCmpTrajectories:
        return {{C::UnreachableMask, C::PositiveLinearScaling, C::KInitialShaping}, zpmt_moves()};
    case ObjectKind::LotteryOrder:
        return {{C::UnreachableMask, C::PositiveLinearScaling, C::KInitialShaping}, {}};
    }
    throw ContractError("unknown object kind");
}

GeneratorDraw generator_draw(ObjectKind kind, const ExperimentParams& p, std::size_t trial) {
    const InvarianceGenerator g = invariance_generator(kind);
    const std::uint64_t stream = stream_of(std::string("generator/") + std::string(kind_tag(kind)));
    const std::uint64_t mdp_seed = derive_seed(p.seed, stream, 2 * trial);
    const std::uint64_t t_seed = derive_seed(p.seed, stream, 2 * trial + 1);
    if (!g.fixture_moves.empty() && trial % 3 == 2) {
        const auto& move = g.fixture_moves[(trial / 3) % g.fixture_moves.size()];
        auto s = sample_transform(move.cls, move.mdp, t_seed,
                                  {p.magnitude, move.strict, p.objects.solver});
        return {move.mdp, {std::move(s.spec)}, 0, t_seed};
    }
    Mdp m = sample_mdp(p.sampler, mdp_seed);
    // cycle through each component alone, then the whole chain
    const std::size_t c = g.chain.size();
    const std::size_t variant = c == 1 ? 0 : trial % (c + 1);
    std::vector<TransformClass> classes;
    if (c == 1 || variant == c) classes = g.chain;
    else classes = {g.chain[variant]};
    Mdp cur = m;
    TransformChain chain;
    for (std::size_t k = 0; k < classes.size(); ++k) {
        auto s = sample_transform(classes[k], cur, derive_seed(t_seed, k, 0),
                                  {p.magnitude, true, p.objects.solver});
        cur = apply_chain(cur, TransformChain{s.spec});
        chain.push_back(std::move(s.spec));
    }
    return {std::move(m), std::move(chain), mdp_seed, t_seed};
}

PreservationMatrix preservation_matrix(const std::vector<ObjectKind>& kinds,
                                       const ExperimentParams& params, std::size_t trials) {
    if (trials == 0) throw ContractError("trials must be positive");
    const std::size_t n = kinds.size();
    PreservationMatrix pm{kinds, std::vector<std::vector<bool>>(n, std::vector<bool>(n, true)),
                          std::vector<std::vector<std::optional<Witness>>>(n, std::vector<std::optional<Witness>>(n)),
                          trials};
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t t = 0;
        scan_draws<GeneratorOutcome>(
            params.backend, trials,
            [&](std::size_t trial) { return evaluate_generator(kinds[i], kinds, params, trial); },
            [&](GeneratorOutcome o) {
                const bool keeps_self = o.diffs[i].equal;
                for (std::size_t j = 0; j < n; ++j) {
                    if (o.diffs[j].equal) continue;
                    pm.preserved[i][j] = false;
                    if (!pm.breaks[i][j] && (keeps_self || i == j))
                        pm.breaks[i][j] = generator_witness(kinds[j], t, o, o.diffs[j]);
                }
                ++t;
                return true;
            });
    }
    return pm;
}

RefinementVerdict refinement_compare(ObjectKind a, ObjectKind b, const ExperimentParams& params,
                                     std::size_t trials) {
    RefinementVerdict v{a, b, Refinement::Equivalent, std::nullopt, std::nullopt, trials};
    if (a == b) return v;
    const PreservationMatrix pm = preservation_matrix({a, b}, params, trials);
    if (!pm.preserved[0][0] || !pm.preserved[1][1])
        throw ContractError("an invariance generator changed its own fingerprint");
    const bool a_le_b = pm.preserved[0][1];
    const bool b_le_a = pm.preserved[1][0];
    v.keeps_a_changes_b = pm.breaks[0][1];
    v.keeps_b_changes_a = pm.breaks[1][0];
    if (a_le_b && b_le_a) v.relation = Refinement::Equivalent;
    else if (a_le_b) v.relation = Refinement::ARefinesB;
    else if (b_le_a) v.relation = Refinement::BRefinesA;
    else v.relation = Refinement::Incomparable;
    return v;
}

ComplementaryAmbiguity complementary_ambiguity_check(ObjectKind a, ObjectKind b,
                                                     const ExperimentParams& params,
                                                     std::size_t trials) {
    if (a == b) throw ContractError("complementary ambiguity needs two distinct kinds");
    ComplementaryAmbiguity out{refinement_compare(a, b, params, trials), false};
    if (out.refinement.relation != Refinement::Incomparable)
        throw ContractError(std::string("kinds are not incomparable: ") +
                            std::string(refinement_tag(out.refinement.relation)));
    // the joint fingerprint changes when either part does
    auto strict_below = [&](const Witness& w, ObjectKind kept) {
        const Mdp m2 = apply_chain(w.mdp, w.chain);
        const bool kept_same = fingerprints_match(fingerprint(w.mdp, kept, params.objects),
                                                  fingerprint(m2, kept, params.objects)).equal;
        const bool other_same = fingerprints_match(fingerprint(w.mdp, w.kind, params.objects),
                                                   fingerprint(m2, w.kind, params.objects)).equal;
        const bool joint_same = kept_same && other_same;
        return kept_same && !joint_same;
    };
    out.confirmed = out.refinement.keeps_a_changes_b && out.refinement.keeps_b_changes_a &&
                    strict_below(*out.refinement.keeps_a_changes_b, a) &&
                    strict_below(*out.refinement.keeps_b_changes_a, b);
    return out;
}

HasseDiagram hasse_from_matrix(const PreservationMatrix& pm) {
    const std::size_t n = pm.kinds.size();
    HasseDiagram h;
    auto le = [&](std::size_t i, std::size_t j) { return i == j || pm.preserved[i][j]; };
    for (std::size_t i = 0; i < n; ++i)
        if (!pm.preserved[i][i])
            h.audit_failures.push_back("generator of " + std::string(kind_tag(pm.kinds[i])) +
                                       " changed its own fingerprint");

    std::vector<std::size_t> group_of(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        if (group_of[i] != n) continue;
        group_of[i] = h.groups.size();
        h.groups.push_back({pm.kinds[i]});
        for (std::size_t j = i + 1; j < n; ++j)
            if (group_of[j] == n && le(i, j) && le(j, i)) {
                group_of[j] = group_of[i];
                h.groups.back().push_back(pm.kinds[j]);
            }
    }
    const std::size_t g = h.groups.size();
    std::vector<std::vector<std::size_t>> members(g);
    for (std::size_t i = 0; i < n; ++i) members[group_of[i]].push_back(i);
    for (std::size_t x = 0; x < g; ++x)
        for (std::size_t i : members[x])
            for (std::size_t j : members[x])
                if (!le(i, j))
                    h.audit_failures.push_back("equivalence is not transitive at " +
                                               std::string(kind_tag(pm.kinds[i])) + ", " +
                                               std::string(kind_tag(pm.kinds[j])));

    std::vector<std::vector<bool>> below(g, std::vector<bool>(g, false));
    for (std::size_t x = 0; x < g; ++x)
        for (std::size_t y = 0; y < g; ++y) {
            if (x == y) continue;
            std::size_t count = 0;
            for (std::size_t i : members[x])
                for (std::size_t j : members[y]) count += le(i, j);
            below[x][y] = count == members[x].size() * members[y].size();
            if (count != 0 && !below[x][y])
                h.audit_failures.push_back("group " + group_label(h.groups[x]) +
                                           " refines only part of " + group_label(h.groups[y]));
        }
    std::vector<std::vector<bool>> strict(g, std::vector<bool>(g, false));
    for (std::size_t x = 0; x < g; ++x)
        for (std::size_t y = 0; y < g; ++y) strict[x][y] = below[x][y] && !below[y][x];

    for (std::size_t x = 0; x < g; ++x)
        for (std::size_t y = 0; y < g; ++y)
            for (std::size_t z = 0; z < g; ++z)
                if (strict[x][y] && strict[y][z] && !strict[x][z])
                    h.audit_failures.push_back("not transitive: " + group_label(h.groups[x]) + " -> " +
                                               group_label(h.groups[y]) + " -> " +
                                               group_label(h.groups[z]));
    // a cycle among strict edges would show up as x < ... < x in the closure
    auto closure = strict;
    for (std::size_t k = 0; k < g; ++k)
        for (std::size_t x = 0; x < g; ++x)
            for (std::size_t y = 0; y < g; ++y)
                if (closure[x][k] && closure[k][y]) closure[x][y] = true;
    for (std::size_t x = 0; x < g; ++x)
        if (closure[x][x]) h.audit_failures.push_back("cycle through " + group_label(h.groups[x]));

    for (std::size_t x = 0; x < g; ++x)
        for (std::size_t y = 0; y < g; ++y) {
            if (!strict[x][y]) continue;
            bool implied = false;
            for (std::size_t z = 0; z < g && !implied; ++z)
                implied = z != x && z != y && closure[x][z] && closure[z][y];
            if (!implied) h.edges.emplace_back(x, y);
        }
    for (std::size_t x = 0; x < g; ++x)
        for (std::size_t y = x + 1; y < g; ++y)
            if (!below[x][y] && !below[y][x]) h.incomparable.emplace_back(x, y);
    return h;
}

HasseDiagram hasse_edges(const std::vector<ObjectKind>& kinds, const ExperimentParams& params,
                         std::size_t trials) {
    if (kinds.empty()) throw ContractError("roster is empty");
    std::vector<ObjectKind> roster;
    for (ObjectKind k : kinds)
        if (std::find(roster.begin(), roster.end(), k) == roster.end()) roster.push_back(k);
    return hasse_from_matrix(preservation_matrix(roster, params, trials));
}

std::string group_label(const std::vector<ObjectKind>& group) {
    std::string s;
    for (std::size_t i = 0; i < group.size(); ++i) {
        if (i) s += " = ";
        s += kind_tag(group[i]);
    }
    return s;
}

std::string to_dot(const HasseDiagram& h) {
    std::string out = "digraph refinement {\n  rankdir=TB;\n  node [shape=box];\n";
    for (std::size_t x = 0; x < h.groups.size(); ++x)
        out += "  g" + std::to_string(x) + " [label=\"" + group_label(h.groups[x]) + "\"];\n";
    for (const auto& [x, y] : h.edges)
        out += "  g" + std::to_string(x) + " -> g" + std::to_string(y) + ";\n";
    out += "}\n";
    return out;
}

ExpectedOrder expected_order() {
    const Json j = Json::parse(embedded::kRefinementOrderJson);
    ExpectedOrder e;
    for (const auto& g : j.at("groups")) {
        std::vector<ObjectKind> kinds;
        for (const auto& k : g.at("kinds")) kinds.push_back(parse_kind(k.get<std::string>()).value());
        e.groups.emplace_back(g.at("name").get<std::string>(), std::move(kinds));
    }
    for (const auto& edge : j.at("edges"))
        e.edges.emplace_back(edge.at(0).get<std::string>(), edge.at(1).get<std::string>());
    return e;
}

OrderDiff compare_order(const HasseDiagram& h, const ExpectedOrder& expected) {
    OrderDiff d;
    std::set<ObjectKind> present;
    for (const auto& g : h.groups) present.insert(g.begin(), g.end());

    // expected partition restricted to the roster
    std::vector<std::string> names;
    std::vector<std::set<ObjectKind>> want;
    std::map<std::string, std::size_t> index;
    for (const auto& [name, kinds] : expected.groups) {
        std::set<ObjectKind> s;
        for (ObjectKind k : kinds)
            if (present.count(k)) s.insert(k);
        if (s.empty()) continue;
        index[name] = names.size();
        names.push_back(name);
        want.push_back(std::move(s));
    }
    std::set<ObjectKind> covered;
    for (const auto& s : want) covered.insert(s.begin(), s.end());
    for (ObjectKind k : present)
        if (!covered.count(k)) d.problems.push_back("kind missing from expected order: " + std::string(kind_tag(k)));

    std::vector<std::size_t> match(h.groups.size(), names.size());
    for (std::size_t x = 0; x < h.groups.size(); ++x) {
        const std::set<ObjectKind> got(h.groups[x].begin(), h.groups[x].end());
        for (std::size_t w = 0; w < want.size(); ++w)
            if (want[w] == got) match[x] = w;
        if (match[x] == names.size()) d.problems.push_back("unexpected group: " + group_label(h.groups[x]));
    }
    if (!d.problems.empty()) return d;

    const std::size_t g = names.size();
    std::vector<std::vector<bool>> reach(g, std::vector<bool>(g, false));
    // edges through absent groups still relate the present ones
    std::vector<std::vector<bool>> full(expected.groups.size(), std::vector<bool>(expected.groups.size(), false));
    std::map<std::string, std::size_t> all_index;
    for (std::size_t i = 0; i < expected.groups.size(); ++i) all_index[expected.groups[i].first] = i;
    for (const auto& [from, to] : expected.edges) full[all_index.at(from)][all_index.at(to)] = true;
    const std::size_t m = full.size();
    for (std::size_t k = 0; k < m; ++k)
        for (std::size_t x = 0; x < m; ++x)
            for (std::size_t y = 0; y < m; ++y)
                if (full[x][k] && full[k][y]) full[x][y] = true;
    for (std::size_t x = 0; x < g; ++x)
        for (std::size_t y = 0; y < g; ++y)
            reach[x][y] = full[all_index.at(names[x])][all_index.at(names[y])];
    std::set<std::pair<std::size_t, std::size_t>> want_edges;
    for (std::size_t x = 0; x < g; ++x)
        for (std::size_t y = 0; y < g; ++y) {
            if (!reach[x][y]) continue;
            bool implied = false;
            for (std::size_t z = 0; z < g && !implied; ++z)
                implied = z != x && z != y && reach[x][z] && reach[z][y];
            if (!implied) want_edges.emplace(x, y);
        }
    std::set<std::pair<std::size_t, std::size_t>> got_edges;
    for (const auto& [x, y] : h.edges) got_edges.emplace(match[x], match[y]);
    for (const auto& e : want_edges)
        if (!got_edges.count(e)) d.problems.push_back("missing edge " + names[e.first] + " -> " + names[e.second]);
    for (const auto& e : got_edges)
        if (!want_edges.count(e)) d.problems.push_back("extra edge " + names[e.first] + " -> " + names[e.second]);
    for (const auto& f : h.audit_failures) d.problems.push_back("audit: " + f);
    return d;
}

std::string_view mark_tag(Mark m) {
    switch (m) {
    case Mark::Inv: return "inv";
    case Mark::InvSpecial: return "inv_special";
    case Mark::Not: return "not";
    case Mark::Mixed: return "mixed";
    case Mark::Blank: return "blank";
    }
    return "?";
}

std::optional<Mark> parse_mark(std::string_view tag) {
    for (Mark m : {Mark::Inv, Mark::InvSpecial, Mark::Not, Mark::Mixed, Mark::Blank})
        if (mark_tag(m) == tag) return m;
    return std::nullopt;
}

DirectoryTable expected_directory_table() {
    const Json j = Json::parse(embedded::kDirectoryTableJson);
    DirectoryTable t;
    for (const auto& c : j.at("columns")) t.columns.push_back(parse_class(c.get<std::string>()).value());
    for (const auto& r : j.at("rows")) {
        TableRow row;
        row.name = r.at("name").get<std::string>();
        for (const auto& k : r.at("kinds")) row.kinds.push_back(parse_kind(k.get<std::string>()).value());
        for (const auto& m : r.at("marks")) row.marks.push_back(parse_mark(m.get<std::string>()).value());
        if (row.marks.size() != t.columns.size()) throw ContractError("table row has wrong width: " + row.name);
        t.rows.push_back(std::move(row));
    }
    return t;
}

std::size_t TableReport::diffs() const {
    return static_cast<std::size_t>(std::count_if(cells.begin(), cells.end(), [](const CellResult& c) { return !c.match; }));
}

namespace {

InvarianceVerdict search_verdict(ObjectKind kind, TransformClass cls, SearchResult r) {
    InvarianceVerdict v{kind, cls, VerdictStatus::Invariant, r.trials_run, r.draws, std::move(r.witness), {}};
    if (v.witness) v.status = VerdictStatus::CounterexampleFound;
    else if (v.trials_run == 0) {
        v.status = VerdictStatus::Skipped;
        v.reason = "no genuine class member could be drawn";
    } else {
        v.reason = "budget exhausted";
    }
    return v;
}

CellResult run_cell(const TableRow& row, TransformClass cls, Mark mark, const TableConfig& cfg) {
    CellResult c;
    c.row = row.name;
    c.column = cls;
    c.expected = mark;
    switch (mark) {
    case Mark::Blank:
        c.observed = "skipped";
        return c;
    case Mark::Inv:
    case Mark::InvSpecial:
        for (ObjectKind k : row.kinds) c.verdicts.push_back(check_invariance(k, cls, cfg.params, cfg.trials));
        c.match = std::all_of(c.verdicts.begin(), c.verdicts.end(),
                              [](const auto& v) { return v.status == VerdictStatus::Invariant; });
        break;
    case Mark::Not:
        for (ObjectKind k : row.kinds)
            c.verdicts.push_back(search_verdict(k, cls, search_counterexample(k, cls, cfg.params, cfg.budget)));
        c.match = std::all_of(c.verdicts.begin(), c.verdicts.end(),
                              [](const auto& v) { return v.status == VerdictStatus::CounterexampleFound; });
        break;
    case Mark::Mixed: {
        const Mdp first = fixtures::two_action();
        const Mdp second = fixtures::zpmt_chain();
        for (ObjectKind k : row.kinds) {
            MixedOutcome a{"two_action", "every sample changes",
                           sample_on_fixture(k, cls, first, cfg.params, cfg.mixed_samples, true), false};
            a.met = a.stats.changed >= cfg.mixed_samples && a.stats.unchanged == 0;
            MixedOutcome b{"zpmt_chain", "no sample changes",
                           sample_on_fixture(k, cls, second, cfg.params, cfg.mixed_samples, false), false};
            b.met = b.stats.unchanged >= cfg.mixed_samples && b.stats.changed == 0;
            c.match = c.match && a.met && b.met;
            c.mixed.push_back(std::move(a));
            c.mixed.push_back(std::move(b));
        }
        c.observed = c.match ? "mixed" : "unexpected";
        return c;
    }
    }
    const auto all = [&](VerdictStatus s) {
        return std::all_of(c.verdicts.begin(), c.verdicts.end(), [&](const auto& v) { return v.status == s; });
    };
    if (all(VerdictStatus::Invariant)) c.observed = "inv";
    else if (all(VerdictStatus::CounterexampleFound)) c.observed = "not";
    else if (all(VerdictStatus::Skipped)) c.observed = "skipped";
    else c.observed = "split";
    return c;
}

} // namespace

TableReport reproduce_directory_table(const TableConfig& cfg) {
    if (cfg.trials == 0 || cfg.budget == 0 || cfg.mixed_samples == 0)
        throw ContractError("table counts must be positive");
    const DirectoryTable table = expected_directory_table();
    for (const auto& name : cfg.rows)
        if (std::none_of(table.rows.begin(), table.rows.end(), [&](const TableRow& r) { return r.name == name; }))
            throw ContractError("unknown table row: " + name);
    TableReport rep;
    for (const auto& row : table.rows) {
        if (!cfg.rows.empty() && std::find(cfg.rows.begin(), cfg.rows.end(), row.name) == cfg.rows.end()) continue;
        for (std::size_t col = 0; col < table.columns.size(); ++col) {
            const TransformClass cls = table.columns[col];
            if (!cfg.columns.empty() && std::find(cfg.columns.begin(), cfg.columns.end(), cls) == cfg.columns.end())
                continue;
            rep.cells.push_back(run_cell(row, cls, row.marks[col], cfg));
        }
    }
    return rep;
}

Json witness_to_json(const Witness& w) {
    Json j;
    j["kind"] = kind_tag(w.kind);
    j["trial"] = w.trial;
    j["mdp_seed"] = w.mdp_seed;
    j["transform_seed"] = w.transform_seed;
    j["diff"] = {{"part", w.diff.part}, {"index", w.diff.index}, {"magnitude", w.diff.magnitude}};
    j["mdp"] = mdp_to_json(w.mdp);
    j["chain"] = chain_to_json(w.chain);
    return j;
}

Witness witness_from_json(const Json& j) {
    const auto kind = parse_kind(j.at("kind").get<std::string>());
    if (!kind) throw ParseError("bad witness", {"unknown kind"});
    PayloadDiff d{false, diff_part_literal(j.at("diff").at("part").get<std::string>()),
                  j.at("diff").at("index").get<std::size_t>(), j.at("diff").at("magnitude").get<double>()};
    return Witness{*kind,
                   j.at("trial").get<std::size_t>(),
                   j.at("mdp_seed").get<std::uint64_t>(),
                   j.at("transform_seed").get<std::uint64_t>(),
                   mdp_from_json(j.at("mdp")),
                   chain_from_json(j.at("chain")),
                   d};
}

Json verdict_to_json(const InvarianceVerdict& v) {
    Json j;
    j["kind"] = kind_tag(v.kind);
    j["class"] = class_tag(v.cls);
    j["status"] = status_tag(v.status);
    j["trials_run"] = v.trials_run;
    j["draws"] = v.draws;
    if (!v.reason.empty()) j["reason"] = v.reason;
    j["witness"] = v.witness ? witness_to_json(*v.witness) : Json(nullptr);
    return j;
}

Json refinement_to_json(const RefinementVerdict& v) {
    Json j;
    j["a"] = kind_tag(v.a);
    j["b"] = kind_tag(v.b);
    j["relation"] = refinement_tag(v.relation);
    j["trials"] = v.trials;
    j["keeps_a_changes_b"] = v.keeps_a_changes_b ? witness_to_json(*v.keeps_a_changes_b) : Json(nullptr);
    j["keeps_b_changes_a"] = v.keeps_b_changes_a ? witness_to_json(*v.keeps_b_changes_a) : Json(nullptr);
    return j;
}

Json table_report_to_json(const TableReport& r) {
    Json cells = Json::array();
    for (const auto& c : r.cells) {
        Json j;
        j["row"] = c.row;
        j["column"] = class_tag(c.column);
        j["expected"] = mark_tag(c.expected);
        j["observed"] = c.observed;
        j["match"] = c.match;
        Json vs = Json::array();
        for (const auto& v : c.verdicts) vs.push_back(verdict_to_json(v));
        j["verdicts"] = std::move(vs);
        if (!c.mixed.empty()) {
            Json ms = Json::array();
            for (const auto& m : c.mixed) {
                Json e;
                e["mdp"] = m.mdp;
                e["expectation"] = m.expectation;
                e["changed"] = m.stats.changed;
                e["unchanged"] = m.stats.unchanged;
                e["degenerate"] = m.stats.degenerate;
                e["met"] = m.met;
                e["first_change"] = m.stats.first_change ? witness_to_json(*m.stats.first_change) : Json(nullptr);
                ms.push_back(std::move(e));
            }
            j["per_mdp"] = std::move(ms);
        }
        cells.push_back(std::move(j));
    }
    Json diffs = Json::array();
    for (const auto& c : r.cells)
        if (!c.match)
            diffs.push_back({{"row", c.row}, {"column", class_tag(c.column)}, {"expected", mark_tag(c.expected)},
                             {"observed", c.observed}});
    Json out;
    out["cells"] = std::move(cells);
    out["diff_count"] = diffs.size();
    out["diffs"] = std::move(diffs);
    return out;
}

Json hasse_to_json(const HasseDiagram& h) {
    Json groups = Json::array();
    for (const auto& g : h.groups) {
        Json kinds = Json::array();
        for (ObjectKind k : g) kinds.push_back(kind_tag(k));
        groups.push_back(std::move(kinds));
    }
    Json edges = Json::array();
    for (const auto& [x, y] : h.edges) edges.push_back({group_label(h.groups[x]), group_label(h.groups[y])});
    Json inc = Json::array();
    for (const auto& [x, y] : h.incomparable) inc.push_back({group_label(h.groups[x]), group_label(h.groups[y])});
    Json out;
    out["groups"] = std::move(groups);
    out["edges"] = std::move(edges);
    out["incomparable"] = std::move(inc);
    out["audit_failures"] = h.audit_failures;
    return out;
}

} // namespace ril
