#pragma once

#include "ril/mdp.hpp"

namespace ril::fixtures {

/// One state, one action, R = 1, gamma = 0.9.
Mdp loop();

/// One state, actions a1 (R = 1) and a2 (R = 1.5), gamma = 0.5.
Mdp two_action();

/// s1 -> s2 with R = 1, s2 absorbing with R = 0, gamma = 0.5, start in s1.
Mdp zpmt_chain();

/// Three states, start in s0; s2 has no incoming transition.
Mdp unreachable_state();

/// Two states, actions a and b, gamma = 0.9, start in s0. (s0,a) splits
/// 0.5/0.5 with R = 1, (s0,b) stays in s0 with R = 2, s1 absorbing.
Mdp transfer();
/// Dynamics of `transfer` with (s0,a) changed to 0.3/0.7.
Table3 transfer_tau_prime();

/// Start s0. a1 reaches s1 (R = 1) or s3 (R = 0) with equal odds, a2 reaches
/// s2 with R = 0.45; s1, s2, s3 absorbing. A nonlinear monotone map of the
/// rewards can flip the optimal action at s0 without changing any return
/// order.
Mdp split();

} // namespace ril::fixtures
