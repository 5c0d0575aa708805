#pragma once

// Exact balanced transportation solver: successive shortest paths on the
// bipartite network S -> rows -> cols -> T with real-valued capacities.
// Dijkstra runs on reduced costs, so the final node potentials double as an
// optimal dual pair (u, v) with u_i + v_j <= C_ij, tight on the support.

#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "measures.hpp"

namespace potpda {

struct BalancedSolution {
    Matrix flow;
    Vector u;  // row potentials
    Vector v;  // column potentials
    double cost = 0.0;
};

namespace detail {

inline double span_total(std::span<const double> xs)
{
    double t = 0.0;
    for (double x : xs) t += x;
    return t;
}

inline void check_masses(std::span<const double> xs, const char* what)
{
    for (double x : xs)
        if (!(x >= 0.0) || !std::isfinite(x)) throw Error(std::string(what) + ": negative or non-finite mass");
}

inline void check_cost(const Matrix& C, std::size_t m, std::size_t n)
{
    if (C.rows() != static_cast<Eigen::Index>(m) || C.cols() != static_cast<Eigen::Index>(n))
        throw Error("cost matrix shape does not match marginals");
    if (!C.allFinite()) throw Error("cost matrix has non-finite entries");
}

}  // namespace detail

/// Solves min <C, F> s.t. F 1 = a, F^T 1 = b, F >= 0. Requires sum(a) == sum(b).
inline BalancedSolution solve_balanced_transport(std::span<const double> a, std::span<const double> b,
                                                 const Matrix& C)
{
    const std::size_t m = a.size();
    const std::size_t n = b.size();
    if (m == 0 || n == 0) throw Error("transport: empty marginal");
    detail::check_masses(a, "transport");
    detail::check_masses(b, "transport");
    detail::check_cost(C, m, n);
    const double total_a = detail::span_total(a);
    const double total_b = detail::span_total(b);
    const double scale = std::max(1.0, std::max(total_a, total_b));
    if (std::abs(total_a - total_b) > 1e-9 * scale) throw Error("transport: unbalanced marginals");
    const double cap_tol = 1e-12 * scale;

    // Node layout: 0 = S, 1..m rows, m+1..m+n cols, m+n+1 = T.
    const std::size_t N = m + n + 2;
    const std::size_t S = 0;
    const std::size_t T = m + n + 1;
    auto row = [](std::size_t i) { return 1 + i; };
    auto col = [m](std::size_t j) { return 1 + m + j; };

    Matrix flow = Matrix::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
    std::vector<double> row_left(a.begin(), a.end());
    std::vector<double> col_left(b.begin(), b.end());
    std::vector<double> pot(N, 0.0);  // costs start nonnegative or are shifted below

    // Nonnegative reduced costs need c_ij + pot_i - pot_j >= 0 initially.
    const double cmin = C.minCoeff();
    if (cmin < 0.0)
        for (std::size_t j = 0; j < n; ++j) pot[col(j)] = cmin, pot[T] = std::min(pot[T], cmin);

    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> dist(N);
    std::vector<std::size_t> parent(N);
    std::vector<char> done(N);

    double remaining = total_a;
    while (remaining > cap_tol) {
        std::fill(dist.begin(), dist.end(), inf);
        std::fill(done.begin(), done.end(), 0);
        dist[S] = 0.0;
        parent[S] = S;
        for (;;) {
            std::size_t u = N;
            double best = inf;
            for (std::size_t x = 0; x < N; ++x)
                if (!done[x] && dist[x] < best) best = dist[x], u = x;
            if (u == N) break;
            done[u] = 1;
            if (u == T) break;
            auto relax = [&](std::size_t w, double c) {
                const double nd = dist[u] + std::max(0.0, c + pot[u] - pot[w]);
                if (nd < dist[w]) dist[w] = nd, parent[w] = u;
            };
            if (u == S) {
                for (std::size_t i = 0; i < m; ++i)
                    if (row_left[i] > cap_tol) relax(row(i), 0.0);
            } else if (u <= m) {
                const auto i = static_cast<Eigen::Index>(u - 1);
                for (std::size_t j = 0; j < n; ++j)
                    if (!done[col(j)]) relax(col(j), C(i, static_cast<Eigen::Index>(j)));
            } else {
                const auto j = static_cast<Eigen::Index>(u - 1 - m);
                for (std::size_t i = 0; i < m; ++i)
                    if (!done[row(i)] && flow(static_cast<Eigen::Index>(i), j) > cap_tol)
                        relax(row(i), -C(static_cast<Eigen::Index>(i), j));
                if (col_left[static_cast<std::size_t>(j)] > cap_tol) relax(T, 0.0);
            }
        }
        if (!std::isfinite(dist[T])) throw Error("transport: no augmenting path (numerical breakdown)");

        const double dT = dist[T];
        for (std::size_t x = 0; x < N; ++x) pot[x] += std::min(dist[x], dT);

        // Bottleneck along the path.
        double delta = inf;
        for (std::size_t w = T; w != S; w = parent[w]) {
            const std::size_t u = parent[w];
            if (u == S) delta = std::min(delta, row_left[w - 1]);
            else if (w == T) delta = std::min(delta, col_left[u - 1 - m]);
            else if (u > m) delta = std::min(delta, flow(static_cast<Eigen::Index>(w - 1),
                                                         static_cast<Eigen::Index>(u - 1 - m)));
        }
        for (std::size_t w = T; w != S; w = parent[w]) {
            const std::size_t u = parent[w];
            if (u == S) row_left[w - 1] -= delta;
            else if (w == T) col_left[u - 1 - m] -= delta;
            else if (u <= m) flow(static_cast<Eigen::Index>(u - 1), static_cast<Eigen::Index>(w - 1 - m)) += delta;
            else {
                double& f = flow(static_cast<Eigen::Index>(w - 1), static_cast<Eigen::Index>(u - 1 - m));
                f -= delta;
                if (f < cap_tol) f = 0.0;
            }
        }
        remaining -= delta;
    }

    BalancedSolution sol;
    sol.flow = std::move(flow);
    sol.v.resize(static_cast<Eigen::Index>(n));
    sol.u.resize(static_cast<Eigen::Index>(m));
    for (std::size_t j = 0; j < n; ++j) sol.v(static_cast<Eigen::Index>(j)) = pot[col(j)];
    // c-transform: the tightest row potential compatible with v. Unchanged on
    // rows carrying flow, and well defined on rows with zero mass.
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(m); ++i)
        sol.u(i) = (C.row(i).transpose() - sol.v).minCoeff();
    sol.cost = (C.array() * sol.flow.array()).sum();
    return sol;
}

}  // namespace potpda
