#include <doctest.h>

#include <cmath>

#include "ril/errors.hpp"
#include "ril/fixtures.hpp"
#include "ril/rng.hpp"
#include "ril/solvers.hpp"

using namespace ril;

namespace {

Mdp random_mdp(std::uint64_t seed, std::size_t n, std::size_t k, double sparsity = 0.3) {
    Rng rng(seed);
    Table3 tau(n, k), r(n, k);
    for (StateId s = 0; s < n; ++s)
        for (ActionId a = 0; a < k; ++a) {
            double sum = 0;
            for (StateId t = 0; t < n; ++t)
                sum += (tau(s, a, t) = rng.bernoulli(sparsity) ? 0.0 : rng.uniform());
            if (sum == 0) {
                tau(s, a, s) = 1;
                sum = 1;
            }
            for (StateId t = 0; t < n; ++t) {
                tau(s, a, t) /= sum;
                r(s, a, t) = rng.uniform(-1, 1);
            }
        }
    std::vector<double> mu0(n, 0.0);
    mu0[0] = 0.5;
    mu0[n - 1] += 0.5;
    return Mdp(std::move(tau), std::move(mu0), std::move(r), rng.bernoulli(0.5) ? 0.9 : 0.5);
}

/// Scalar soft fixed point on a one-state MDP, iterated far past convergence.
std::pair<double, double> soft_two_action_oracle(double beta) {
    double q1 = 0, q2 = 0;
    for (int i = 0; i < 2000; ++i) {
        const double m = std::max(q1, q2);
        const double v = m + std::log(std::exp(beta * (q1 - m)) + std::exp(beta * (q2 - m))) / beta;
        q1 = 1.0 + 0.5 * v;
        q2 = 1.5 + 0.5 * v;
    }
    return {q1, q2};
}

} // namespace

TEST_CASE("policy_q on micro MDPs") {
    const auto loop = policy_q(fixtures::loop(), Policy::uniform(1, 1));
    CHECK(loop.q(0, 0) == doctest::Approx(10).epsilon(1e-12));
    CHECK(loop.v[0] == doctest::Approx(10).epsilon(1e-12));
    CHECK(*loop.j == doctest::Approx(10).epsilon(1e-12));

    const auto two = policy_q(fixtures::two_action(), Policy::uniform(1, 2));
    CHECK(two.v[0] == doctest::Approx(2.5).epsilon(1e-12));
    CHECK(two.q(0, 0) == doctest::Approx(2.25).epsilon(1e-12));
    CHECK(two.q(0, 1) == doctest::Approx(2.75).epsilon(1e-12));
    CHECK(policy_value(fixtures::two_action(), Policy::uniform(1, 2)) ==
          doctest::Approx(2.5).epsilon(1e-12));
}

TEST_CASE("policy advantage has zero mean under the policy") {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        const Mdp m = random_mdp(seed, 4, 3);
        Rng rng(seed + 100);
        Table2 p(4, 3);
        for (StateId s = 0; s < 4; ++s) {
            double sum = 0;
            for (ActionId a = 0; a < 3; ++a) sum += (p(s, a) = rng.uniform());
            for (ActionId a = 0; a < 3; ++a) p(s, a) /= sum;
        }
        const Policy pi{p};
        const auto vt = policy_q(m, pi);
        for (StateId s = 0; s < 4; ++s) {
            double e = 0;
            for (ActionId a = 0; a < 3; ++a) e += pi(s, a) * vt.adv(s, a);
            CHECK(std::abs(e) < 1e-12);
        }
    }
}

TEST_CASE("linear and iterative policy evaluation agree") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const Mdp m = random_mdp(seed, 5, 3);
        const Policy pi = Policy::uniform(5, 3);
        const auto a = policy_q(m, pi);
        const auto b = policy_q_iterative(m, pi);
        const double tol = 1e-8 * (1 + m.max_abs_reward());
        for (std::size_t i = 0; i < a.q.flat().size(); ++i)
            CHECK(std::abs(a.q.flat()[i] - b.q.flat()[i]) < tol);
    }
}

TEST_CASE("optimal_q on micro MDPs") {
    const auto loop = optimal_q(fixtures::loop());
    CHECK(std::abs(loop.q(0, 0) - 10) < 1e-10);

    const auto two = optimal_q(fixtures::two_action());
    CHECK(std::abs(two.v[0] - 3) < 1e-10);
    CHECK(std::abs(two.q(0, 0) - 2.5) < 1e-10);
    CHECK(std::abs(two.q(0, 1) - 3) < 1e-10);
    CHECK(std::abs(two.adv(0, 0) + 0.5) < 1e-10);
    CHECK(two.adv(0, 1) == 0.0);

    const auto z = optimal_q(fixtures::zpmt_chain());
    CHECK(std::abs(z.v[0] - 1) < 1e-10);
    CHECK(std::abs(z.v[1]) < 1e-10);
}

TEST_CASE("optimal_q stops with certified error and reports non-convergence") {
    const Mdp m = fixtures::loop().with_gamma(0.9999);
    SolverParams p;
    p.max_iters = 10;
    try {
        optimal_q(m, p);
        FAIL("expected ConvergenceError");
    } catch (const ConvergenceError& e) {
        CHECK(e.iterations() == 10);
        CHECK(e.residual() > 0);
    }
    // optimal_q agrees with the best deterministic policy's linear solve
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Mdp r = random_mdp(seed, 4, 2);
        const auto opt = optimal_q(r);
        const Policy greedy = maximally_supportive_optimal_policy(r);
        const auto pe = policy_q(r, greedy);
        for (StateId s = 0; s < 4; ++s) CHECK(std::abs(opt.v[s] - pe.v[s]) < 1e-9);
    }
}

TEST_CASE("soft_q") {
    for (double beta : {0.3, 1.0, 7.0}) {
        SolverParams p;
        p.beta = beta;
        const auto loop = soft_q(fixtures::loop(), p);
        CHECK(std::abs(loop.q(0, 0) - 10) < 1e-9);

        const auto [q1, q2] = soft_two_action_oracle(beta);
        const auto two = soft_q(fixtures::two_action(), p);
        CHECK(std::abs(two.q(0, 0) - q1) < 1e-9);
        CHECK(std::abs(two.q(0, 1) - q2) < 1e-9);

        const Policy mce = mce_policy(fixtures::two_action(), p);
        const double e1 = std::exp(beta * q1), e2 = std::exp(beta * q2);
        CHECK(mce(0, 1) == doctest::Approx(e2 / (e1 + e2)).epsilon(1e-9));
    }
    SolverParams big;
    big.beta = 1e3;
    const auto two = soft_q(fixtures::two_action(), big);
    CHECK(std::isfinite(two.q(0, 1)));
}

TEST_CASE("boltzmann_rational_policy") {
    const Policy p = boltzmann_rational_policy(fixtures::two_action());
    CHECK(p(0, 1) == doctest::Approx(1.0 / (1.0 + std::exp(-0.5))).epsilon(1e-9));
    double last = 0;
    for (double beta : {1.0, 2.0, 5.0, 20.0, 100.0}) {
        SolverParams sp;
        sp.beta = beta;
        const double pa2 = boltzmann_rational_policy(fixtures::two_action(), sp)(0, 1);
        CHECK(pa2 > last);
        last = pa2;
    }
    CHECK(last > 1 - 1e-12);

    Table3 tau(1, 2, 1.0);
    const Mdp tied(tau, {1.0}, Table3(1, 2, 0.7), 0.9);
    const Policy u = boltzmann_rational_policy(tied);
    CHECK(u(0, 0) == doctest::Approx(0.5));
    const Policy single = mce_policy(fixtures::loop());
    CHECK(single(0, 0) == 1.0);
}

TEST_CASE("optimal action sets and the supportive policy") {
    const Mdp two = fixtures::two_action();
    CHECK(optimal_action_sets(two) == ActionSets{{1}});
    const Policy p = maximally_supportive_optimal_policy(two);
    CHECK(p(0, 0) == 0.0);
    CHECK(p(0, 1) == 1.0);

    Table3 tau(1, 2, 1.0);
    const Mdp tied(tau, {1.0}, Table3(1, 2, 0.7), 0.9);
    CHECK(optimal_action_sets(tied) == ActionSets{{0, 1}});
    const Policy u = maximally_supportive_optimal_policy(tied);
    CHECK(u(0, 0) == 0.5);
    CHECK(u(0, 1) == 0.5);

    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Mdp m = random_mdp(seed, 5, 3);
        Table3 r = m.reward();
        for (double& x : r.flat()) x *= 2.0;
        CHECK(optimal_action_sets(m) == optimal_action_sets(m.with_reward(r)));
    }
}

TEST_CASE("softmax is unchanged exactly by per-state constants") {
    Rng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        Table2 f(3, 4), g(3, 4);
        const bool constant = trial % 2 == 0;
        for (StateId s = 0; s < 3; ++s) {
            const double c = rng.uniform(-3, 3);
            for (ActionId a = 0; a < 4; ++a) {
                f(s, a) = rng.uniform(-2, 2);
                g(s, a) = f(s, a) + (constant ? c : rng.uniform(-3, 3));
            }
        }
        const Table2 pf = softmax_rows(f, 1.0), pg = softmax_rows(g, 1.0);
        double diff = 0;
        for (std::size_t i = 0; i < pf.flat().size(); ++i)
            diff = std::max(diff, std::abs(pf.flat()[i] - pg.flat()[i]));
        if (constant)
            CHECK(diff < 1e-12);
        else
            CHECK(diff > 1e-6);
    }
}

TEST_CASE("serial and parallel backends agree bitwise") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Mdp m = random_mdp(seed, 6, 4);
        SolverParams s, p;
        p.backend = Backend::Parallel;
        CHECK(optimal_q(m, s).q == optimal_q(m, p).q);
        CHECK(soft_q(m, s).q == soft_q(m, p).q);
    }
}
