#include "ril/fixtures.hpp"

namespace ril::fixtures {

namespace {

void absorb(Table3& tau, StateId s) {
    for (ActionId a = 0; a < tau.actions(); ++a) tau(s, a, s) = 1.0;
}

} // namespace

Mdp loop() {
    Table3 tau(1, 1, 1.0);
    Table3 r(1, 1, 1.0);
    return Mdp({"s"}, {"a"}, std::move(tau), {1.0}, std::move(r), 0.9);
}

Mdp two_action() {
    Table3 tau(1, 2, 1.0);
    Table3 r(1, 2);
    r(0, 0, 0) = 1.0;
    r(0, 1, 0) = 1.5;
    return Mdp({"s"}, {"a1", "a2"}, std::move(tau), {1.0}, std::move(r), 0.5);
}

Mdp zpmt_chain() {
    Table3 tau(2, 1);
    tau(0, 0, 1) = 1.0;
    tau(1, 0, 1) = 1.0;
    Table3 r(2, 1);
    r(0, 0, 1) = 1.0;
    return Mdp({"s1", "s2"}, {"a"}, std::move(tau), {1.0, 0.0}, std::move(r), 0.5);
}

Mdp unreachable_state() {
    Table3 tau(3, 2);
    tau(0, 0, 1) = 1.0;
    tau(0, 1, 0) = 1.0;
    absorb(tau, 1);
    tau(2, 0, 1) = 1.0;
    tau(2, 1, 0) = 1.0;
    Table3 r(3, 2);
    r(0, 0, 1) = 0.5;
    r(0, 1, 0) = -0.25;
    r(1, 0, 1) = 1.0;
    r(1, 1, 1) = -1.0;
    r(2, 0, 1) = 2.0;
    r(2, 1, 0) = 3.0;
    return Mdp({"s0", "s1", "s2"}, {"a0", "a1"}, std::move(tau), {1.0, 0.0, 0.0}, std::move(r),
               0.9);
}

Mdp transfer() {
    Table3 tau(2, 2);
    tau(0, 0, 0) = 0.5;
    tau(0, 0, 1) = 0.5;
    tau(0, 1, 0) = 1.0;
    absorb(tau, 1);
    Table3 r(2, 2);
    r(0, 0, 0) = 1.0;
    r(0, 0, 1) = 1.0;
    r(0, 1, 0) = 2.0;
    return Mdp({"s0", "s1"}, {"a", "b"}, std::move(tau), {1.0, 0.0}, std::move(r), 0.9);
}

Table3 transfer_tau_prime() {
    Table3 tau = transfer().tau();
    tau(0, 0, 0) = 0.3;
    tau(0, 0, 1) = 0.7;
    return tau;
}

Mdp split() {
    Table3 tau(4, 2);
    tau(0, 0, 1) = 0.5;
    tau(0, 0, 3) = 0.5;
    tau(0, 1, 2) = 1.0;
    for (StateId s = 1; s < 4; ++s) absorb(tau, s);
    Table3 r(4, 2);
    r(0, 0, 1) = 1.0;
    r(0, 1, 2) = 0.45;
    return Mdp({"s0", "s1", "s2", "s3"}, {"a1", "a2"}, std::move(tau), {1.0, 0.0, 0.0, 0.0},
               std::move(r), 0.9);
}

} // namespace ril::fixtures
