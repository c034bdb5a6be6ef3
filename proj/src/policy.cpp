#include "ril/policy.hpp"

#include <cmath>
#include <string>

#include "ril/errors.hpp"

namespace ril {

Policy::Policy(Table2 probs) : probs_(std::move(probs)) {
    for (StateId s = 0; s < probs_.states(); ++s) {
        double sum = 0.0;
        for (double p : probs_.row(s)) {
            if (!(p >= 0.0)) throw ContractError("policy row " + std::to_string(s) + " has a negative entry");
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-12)
            throw ContractError("policy row " + std::to_string(s) + " does not sum to 1");
    }
}

Policy Policy::uniform(std::size_t states, std::size_t actions) {
    return Policy(Table2(states, actions, 1.0 / static_cast<double>(actions)));
}

} // namespace ril
