#include "ril/kernels.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <vector>

#include <omp.h>

namespace ril {

namespace {

std::atomic<int> g_threads{0};

int env_cap() {
    const char* env = std::getenv("RIL_THREADS");
    if (!env) return 0;
    const int n = std::atoi(env);
    return n > 0 ? n : 0;
}

using Index = std::ptrdiff_t;

inline void backup_row(const Table3& tau, const Table2& rbar, double gamma,
                       std::span<const double> v, Table2& q, StateId s) {
    const std::size_t n = tau.states();
    for (ActionId a = 0; a < tau.actions(); ++a) {
        const auto row = tau.row(s, a);
        double acc = 0.0;
        for (StateId t = 0; t < n; ++t) acc += row[t] * v[t];
        q(s, a) = rbar(s, a) + gamma * acc;
    }
}

inline double row_max(std::span<const double> r) { return *std::max_element(r.begin(), r.end()); }

inline double row_lse(std::span<const double> r, double beta) {
    double m = -INFINITY;
    for (double x : r) m = std::max(m, beta * x);
    double sum = 0.0;
    for (double x : r) sum += std::exp(beta * x - m);
    return (m + std::log(sum)) / beta;
}

inline void logistic_row(std::span<const double> g, double beta, std::span<double> out,
                         std::size_t i) {
    const std::size_t n = g.size();
    double* dst = out.data() + triangle_offset(n, i);
    for (std::size_t j = i + 1; j < n; ++j) *dst++ = logistic(beta * (g[j] - g[i]));
}

inline void order_row(std::span<const double> g, double tie_tol, std::span<std::uint8_t> out,
                      std::size_t i) {
    const std::size_t n = g.size();
    std::uint8_t* dst = out.data() + triangle_offset(n, i);
    for (std::size_t j = i + 1; j < n; ++j) {
        const double d = g[i] - g[j];
        *dst++ = std::abs(d) <= tie_tol ? 1 : (d < 0 ? 0 : 2);
    }
}

} // namespace

int worker_threads() {
    int n = g_threads.load();
    if (n <= 0) n = omp_get_max_threads();
    const int cap = env_cap();
    if (cap > 0) n = std::min(n, cap);
    return std::max(n, 1);
}

void set_worker_threads(int n) { g_threads.store(n); }

double logistic(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

void bellman_backup(Backend b, const Table3& tau, const Table2& rbar, double gamma,
                    std::span<const double> v, Table2& q) {
    const Index n = static_cast<Index>(tau.states());
    if (b == Backend::Serial) {
        for (Index s = 0; s < n; ++s) backup_row(tau, rbar, gamma, v, q, s);
        return;
    }
#pragma omp parallel for schedule(static) num_threads(worker_threads())
    for (Index s = 0; s < n; ++s) backup_row(tau, rbar, gamma, v, q, s);
}

void greedy_value(Backend b, const Table2& q, std::span<double> v) {
    const Index n = static_cast<Index>(q.states());
    if (b == Backend::Serial) {
        for (Index s = 0; s < n; ++s) v[s] = row_max(q.row(s));
        return;
    }
#pragma omp parallel for schedule(static) num_threads(worker_threads())
    for (Index s = 0; s < n; ++s) v[s] = row_max(q.row(s));
}

void soft_value(Backend b, const Table2& q, double beta, std::span<double> v) {
    const Index n = static_cast<Index>(q.states());
    if (b == Backend::Serial) {
        for (Index s = 0; s < n; ++s) v[s] = row_lse(q.row(s), beta);
        return;
    }
#pragma omp parallel for schedule(static) num_threads(worker_threads())
    for (Index s = 0; s < n; ++s) v[s] = row_lse(q.row(s), beta);
}

void pairwise_logistic(Backend b, std::span<const double> g, double beta, std::span<double> out) {
    const Index n = static_cast<Index>(g.size());
    if (b == Backend::Serial) {
        for (Index i = 0; i < n; ++i) logistic_row(g, beta, out, i);
        return;
    }
#pragma omp parallel for schedule(dynamic, 16) num_threads(worker_threads())
    for (Index i = 0; i < n; ++i) logistic_row(g, beta, out, i);
}

void pairwise_order(Backend b, std::span<const double> g, double tie_tol,
                    std::span<std::uint8_t> out) {
    const Index n = static_cast<Index>(g.size());
    if (b == Backend::Serial) {
        for (Index i = 0; i < n; ++i) order_row(g, tie_tol, out, i);
        return;
    }
#pragma omp parallel for schedule(dynamic, 16) num_threads(worker_threads())
    for (Index i = 0; i < n; ++i) order_row(g, tie_tol, out, i);
}

void for_each_trial(Backend b, std::size_t count, const std::function<void(std::size_t)>& fn) {
    if (b == Backend::Serial || worker_threads() == 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::exception_ptr> errors(count);
    const Index n = static_cast<Index>(count);
#pragma omp parallel for schedule(dynamic, 1) num_threads(worker_threads())
    for (Index i = 0; i < n; ++i) {
        try {
            fn(static_cast<std::size_t>(i));
        } catch (...) {
            errors[i] = std::current_exception();
        }
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

} // namespace ril
