#pragma once

#include <span>

#include "ril/tables.hpp"

namespace ril {

/// Stochastic policy, one distribution over actions per state.
class Policy {
public:
    /// Throws ContractError unless every row is a distribution.
    explicit Policy(Table2 probs);

    static Policy uniform(std::size_t states, std::size_t actions);

    std::size_t states() const noexcept { return probs_.states(); }
    std::size_t actions() const noexcept { return probs_.actions(); }
    double operator()(StateId s, ActionId a) const { return probs_(s, a); }
    std::span<const double> row(StateId s) const { return probs_.row(s); }
    const Table2& table() const noexcept { return probs_; }

    friend bool operator==(const Policy&, const Policy&) = default;

private:
    Table2 probs_;
};

} // namespace ril
