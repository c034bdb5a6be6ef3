#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "ril/errors.hpp"
#include "ril/fixtures.hpp"
#include "ril/mdp.hpp"
#include "ril/rng.hpp"

using namespace ril;

namespace {

Mdp dense_random(std::uint64_t seed, std::size_t n, std::size_t k) {
    Rng rng(seed);
    Table3 tau(n, k), r(n, k);
    for (StateId s = 0; s < n; ++s)
        for (ActionId a = 0; a < k; ++a) {
            double sum = 0;
            for (StateId t = 0; t < n; ++t) sum += (tau(s, a, t) = 0.1 + rng.uniform());
            for (StateId t = 0; t < n; ++t) {
                tau(s, a, t) /= sum;
                r(s, a, t) = rng.uniform(-1, 1);
            }
        }
    std::vector<double> mu0(n, 0.0);
    mu0[0] = 1.0;
    return Mdp(std::move(tau), std::move(mu0), std::move(r), 0.9);
}

} // namespace

TEST_CASE("validate_mdp") {
    CHECK(validate_mdp(fixtures::loop()).empty());

    Table3 half(1, 1, 0.5);
    const Mdp bad_row({"s"}, {"a"}, half, {1.0}, Table3(1, 1, 1.0), 0.9);
    const auto v = validate_mdp(bad_row);
    REQUIRE(v.size() == 1);
    CHECK(v[0].find("row sum 0.5") != std::string::npos);

    const Mdp bad_gamma = fixtures::loop().with_gamma(1.0);
    const auto g = validate_mdp(bad_gamma);
    REQUIRE(g.size() == 1);
    CHECK(g[0].find("gamma") != std::string::npos);
    CHECK_THROWS_AS(require_valid(bad_gamma), ContractError);
}

TEST_CASE("shape mismatch is a contract error") {
    CHECK_THROWS_AS(Mdp(Table3(2, 1, 0.5), {1.0}, Table3(2, 1), 0.5), ContractError);
    CHECK_THROWS_AS(Mdp(Table3(2, 1, 0.5), {1.0, 0.0}, Table3(1, 1), 0.5), ContractError);
}

TEST_CASE("terminal states are derived") {
    const Mdp z = fixtures::zpmt_chain();
    CHECK_FALSE(z.is_terminal(0));
    CHECK(z.is_terminal(1));
    CHECK_FALSE(fixtures::loop().is_terminal(0));
}

TEST_CASE("classify_transitions") {
    const auto p = classify_transitions(fixtures::zpmt_chain());
    CHECK(p.possible == std::vector<Transition>{{0, 0, 1}, {1, 0, 1}});
    CHECK(p.impossible == std::vector<Transition>{{0, 0, 0}, {1, 0, 0}});

    const auto l = classify_transitions(fixtures::loop());
    CHECK(l.possible.size() == 1);
    CHECK(l.impossible.empty());

    const Mdp d = dense_random(3, 4, 2);
    const auto dp = classify_transitions(d);
    CHECK(dp.impossible.empty());
    CHECK(dp.possible.size() == 4 * 2 * 4);
}

TEST_CASE("reachability") {
    const auto r = reachability(fixtures::unreachable_state());
    CHECK(r.reachable_states == StateFlags{true, true, false});
    for (const auto& t : r.reachable_transitions) CHECK(t.s != 2);

    CHECK(reachability(fixtures::loop()).reachable_states == StateFlags{true});

    const Mdp z = fixtures::zpmt_chain();
    const Policy det(Table2(2, 1, 1.0));
    const auto rz = reachability(z, &det);
    REQUIRE(rz.supported_states.has_value());
    CHECK(*rz.supported_states == StateFlags{true, true});
}

TEST_CASE("reachability is monotone in possible transitions") {
    Mdp m = fixtures::unreachable_state();
    Table3 tau = m.tau();
    tau(1, 0, 1) = 0.5;
    tau(1, 0, 2) = 0.5;
    const auto r = reachability(m.with_tau(tau));
    CHECK(r.reachable_states == StateFlags{true, true, true});
}

TEST_CASE("unreachable transitions") {
    const auto u = unreachable_transitions(fixtures::unreachable_state());
    // every transition out of s2, plus the impossible ones out of s0 and s1
    CHECK(std::count_if(u.begin(), u.end(), [](const Transition& t) { return t.s == 2; }) == 6);
    CHECK(u.size() == 6 + (6 - 2) + (6 - 2));
}

TEST_CASE("enumerate_fragments") {
    const auto l = enumerate_fragments(fixtures::loop(), 2, true, false);
    REQUIRE(l.size() == 3);
    CHECK(l[2].length() == 2);

    const auto z = enumerate_fragments(fixtures::zpmt_chain(), 1, true, false);
    REQUIRE(z.size() == 4);
    CHECK(z[0] == Fragment{0, {}});
    CHECK(z[1] == Fragment{1, {}});
    CHECK(z[2] == Fragment{0, {{0, 1}}});
    CHECK(z[3] == Fragment{1, {{0, 1}}});

    const Mdp u = fixtures::unreachable_state();
    CHECK(enumerate_fragments(u, 0, true, false).size() == 3);
    CHECK(enumerate_fragments(u, 0, true, true).size() == 1);

    // all fragments, possible or not: |S| (|A||S|)^n per length
    CHECK(enumerate_fragments(u, 1, false, false).size() == 3 + 3 * 6);
    CHECK_THROWS_AS(enumerate_fragments(u, 6, false, false, 1000), CapExceeded);
}

TEST_CASE("enumerate_fragments is deterministic and sorted") {
    const Mdp d = dense_random(11, 3, 2);
    const auto a = enumerate_fragments(d, 2, true, false);
    const auto b = enumerate_fragments(d, 2, true, false);
    CHECK(a == b);
    for (std::size_t i = 1; i < a.size(); ++i) {
        const auto key = [](const Fragment& f) { return std::make_pair(f.steps.size(), f.start); };
        CHECK(key(a[i - 1]) <= key(a[i]));
    }
}

TEST_CASE("fragment_return") {
    const Mdp two = fixtures::two_action();
    const Fragment z{0, {{0, 0}, {1, 0}}};
    CHECK(fragment_return(two, z) == doctest::Approx(1.75).epsilon(1e-15));
    CHECK(fragment_return(two, Fragment{0, {}}) == 0.0);
    CHECK(fragment_return(fixtures::loop(), Fragment{0, {{0, 0}}}) == 1.0);
}

TEST_CASE("lasso_return") {
    const Mdp loop = fixtures::loop();
    CHECK(lasso_return(loop, {{0, {}}, {0, {{0, 0}}}}) == doctest::Approx(10.0).epsilon(1e-14));
    const Mdp two = fixtures::two_action();
    CHECK(lasso_return(two, {{0, {}}, {0, {{1, 0}}}}) == doctest::Approx(3.0).epsilon(1e-15));
    CHECK(lasso_return(two, {{0, {{0, 0}, {1, 0}}}, {0, {{0, 0}}}}) ==
          doctest::Approx(2.25).epsilon(1e-15));
    CHECK_THROWS_AS(lasso_return(fixtures::zpmt_chain(), {{0, {}}, {0, {{0, 1}}}}), ContractError);
}

TEST_CASE("enumerate_lassos gives one representative per trajectory") {
    const Mdp two = fixtures::two_action();
    // prefix <= 1, cycle <= 2 over a single state with two self-loops:
    // cycles a1, a2, a1a2, a2a1 (a1a1 and a2a2 are not primitive);
    // prefixes: empty, a1, a2; a prefix may not end with the cycle's last step.
    const auto l = enumerate_lassos(two, 1, 2);
    CHECK(l.size() == 4 + 2 + 2);
    std::vector<double> g;
    for (const auto& x : l) g.push_back(lasso_return(two, x));
    // a2 a1 a2 a1 ... written once as cycle (a2 a1), never as a2 + (a1 a2)
    const LassoTrajectory rotated{{0, {{1, 0}}}, {0, {{0, 0}, {1, 0}}}};
    CHECK(std::find(l.begin(), l.end(), rotated) == l.end());

    const auto z = enumerate_lassos(fixtures::zpmt_chain(), 1, 2);
    REQUIRE(z.size() == 1);
    CHECK(lasso_return(fixtures::zpmt_chain(), z[0]) == 1.0);
}

TEST_CASE("return identities on random MDPs") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Mdp m = dense_random(seed, 3, 2);
        const double bound_scale = m.max_abs_reward() / (1 - m.gamma());
        for (const auto& x : enumerate_lassos(m, 2, 2)) {
            // truncating the lasso at its prefix
            const double gx = lasso_return(m, x);
            const double gz = fragment_return(m, x.prefix);
            const double n = static_cast<double>(x.prefix.length());
            CHECK(std::abs(gx - gz) <= std::pow(m.gamma(), n) * bound_scale + 1e-12);
        }
        const auto frags = enumerate_fragments(m, 2, true, false);
        for (const auto& a : frags) {
            for (const auto& b : frags) {
                if (b.start != a.end()) continue;
                const double lhs = fragment_return(m, concatenate(a, b));
                const double rhs = fragment_return(m, a) +
                                   std::pow(m.gamma(), static_cast<double>(a.length())) *
                                       fragment_return(m, b);
                CHECK(lhs == doctest::Approx(rhs).epsilon(1e-13));
            }
        }
    }
}
