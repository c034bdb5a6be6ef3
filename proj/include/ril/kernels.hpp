#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>

#include "ril/tables.hpp"

namespace ril {

/// Every kernel has a serial reference and an OpenMP version. Each output
/// element is computed by the same expression in both, so results agree
/// bitwise.
enum class Backend { Serial, Parallel };

/// Worker count for the parallel backend. Defaults to the OpenMP maximum,
/// capped by the RIL_THREADS environment variable.
int worker_threads();
void set_worker_threads(int n);

/// q(s,a) = rbar(s,a) + gamma * sum_s' tau(s'|s,a) v(s')
void bellman_backup(Backend b, const Table3& tau, const Table2& rbar, double gamma,
                    std::span<const double> v, Table2& q);

/// v(s) = max_a q(s,a)
void greedy_value(Backend b, const Table2& q, std::span<double> v);

/// v(s) = (1/beta) log sum_a exp(beta q(s,a)), with max subtraction.
void soft_value(Backend b, const Table2& q, double beta, std::span<double> v);

/// Number of unordered pairs i < j.
constexpr std::size_t triangle_size(std::size_t n) { return n < 2 ? 0 : n * (n - 1) / 2; }
constexpr std::size_t triangle_offset(std::size_t n, std::size_t i) { return i * (2 * n - i - 1) / 2; }

/// out[(i,j)] = 1 / (1 + exp(beta (g_i - g_j))) for i < j, row-major upper triangle.
void pairwise_logistic(Backend b, std::span<const double> g, double beta, std::span<double> out);

/// Order code for each i < j: 0 if g_i < g_j, 1 if tied within tie_tol, 2 if g_i > g_j.
void pairwise_order(Backend b, std::span<const double> g, double tie_tol,
                    std::span<std::uint8_t> out);

/// Runs fn(i) for i in [0, count). Exceptions are collected and the one with
/// the smallest index is rethrown.
void for_each_trial(Backend b, std::size_t count, const std::function<void(std::size_t)>& fn);

/// Stable logistic 1 / (1 + exp(-x)).
double logistic(double x);

} // namespace ril
