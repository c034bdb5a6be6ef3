#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace ril {

using StateId = std::size_t;
using ActionId = std::size_t;

/// Dense |S|x|A| table, row-major by state.
class Table2 {
public:
    Table2() = default;
    Table2(std::size_t states, std::size_t actions, double fill = 0.0)
        : states_(states), actions_(actions), data_(states * actions, fill) {}

    std::size_t states() const noexcept { return states_; }
    std::size_t actions() const noexcept { return actions_; }

    double& operator()(StateId s, ActionId a) { return data_[s * actions_ + a]; }
    double operator()(StateId s, ActionId a) const { return data_[s * actions_ + a]; }

    std::span<double> row(StateId s) { return {data_.data() + s * actions_, actions_}; }
    std::span<const double> row(StateId s) const { return {data_.data() + s * actions_, actions_}; }

    std::span<double> flat() noexcept { return data_; }
    std::span<const double> flat() const noexcept { return data_; }

    friend bool operator==(const Table2&, const Table2&) = default;

private:
    std::size_t states_ = 0;
    std::size_t actions_ = 0;
    std::vector<double> data_;
};

/// Dense |S|x|A|x|S| table indexed [s][a][s'], used for both transition
/// probabilities and rewards.
class Table3 {
public:
    Table3() = default;
    Table3(std::size_t states, std::size_t actions, double fill = 0.0)
        : states_(states), actions_(actions), data_(states * actions * states, fill) {}

    std::size_t states() const noexcept { return states_; }
    std::size_t actions() const noexcept { return actions_; }
    std::size_t size() const noexcept { return data_.size(); }

    std::size_t index(StateId s, ActionId a, StateId next) const noexcept {
        return (s * actions_ + a) * states_ + next;
    }

    double& operator()(StateId s, ActionId a, StateId next) { return data_[index(s, a, next)]; }
    double operator()(StateId s, ActionId a, StateId next) const { return data_[index(s, a, next)]; }

    /// Successor row for the pair (s, a).
    std::span<double> row(StateId s, ActionId a) {
        return {data_.data() + (s * actions_ + a) * states_, states_};
    }
    std::span<const double> row(StateId s, ActionId a) const {
        return {data_.data() + (s * actions_ + a) * states_, states_};
    }

    std::span<double> flat() noexcept { return data_; }
    std::span<const double> flat() const noexcept { return data_; }

    double max_abs() const noexcept {
        double m = 0.0;
        for (double x : data_) m = std::max(m, std::abs(x));
        return m;
    }

    friend bool operator==(const Table3&, const Table3&) = default;

private:
    std::size_t states_ = 0;
    std::size_t actions_ = 0;
    std::vector<double> data_;
};

} // namespace ril
