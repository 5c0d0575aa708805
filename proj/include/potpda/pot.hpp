#pragma once

// Partial optimal transport: minimise <C, P> over P >= 0 with P 1 <= a,
// P^T 1 <= b and 1^T P 1 = alpha.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "measures.hpp"
#include "transport.hpp"

namespace potpda {

struct TransportPlan {
    Matrix matrix;
    std::vector<double> row_caps;
    std::vector<double> col_caps;
    double mass = 0.0;

    Vector row_sums() const { return matrix.rowwise().sum(); }
    Vector col_sums() const { return matrix.colwise().sum().transpose(); }
    double total() const { return matrix.sum(); }
    double cost(const Matrix& C) const { return (C.array() * matrix.array()).sum(); }

    /// Largest violation of the nonnegativity and cap constraints.
    double cap_violation() const
    {
        double worst = std::max(0.0, -matrix.minCoeff());
        const Vector r = row_sums();
        const Vector c = col_sums();
        for (Eigen::Index i = 0; i < r.size(); ++i)
            worst = std::max(worst, r(i) - row_caps[static_cast<std::size_t>(i)]);
        for (Eigen::Index j = 0; j < c.size(); ++j)
            worst = std::max(worst, c(j) - col_caps[static_cast<std::size_t>(j)]);
        return worst;
    }

    double mass_error() const { return std::abs(total() - mass); }

    bool feasible(double tol = 1e-9) const { return cap_violation() <= tol && mass_error() <= tol; }
};

struct SolverConfig {
    double epsilon = 7.0;
    int max_iter = 5000;
    double tol = 1e-9;

    void validate() const
    {
        if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw Error("solver: epsilon must be positive");
        if (max_iter < 1) throw Error("solver: max_iter must be >= 1");
        if (!(tol > 0.0)) throw Error("solver: tol must be positive");
    }
};

struct PartialOtResult {
    TransportPlan plan;
    double cost = 0.0;
    bool converged = true;
    int iterations = 0;
};

enum class OtMethod { exact, entropic };

namespace detail {

inline void check_partial_instance(std::span<const double> a, std::span<const double> b,
                                   const Matrix& C, double alpha)
{
    if (a.empty() || b.empty()) throw Error("partial OT: empty marginal");
    check_masses(a, "partial OT");
    check_masses(b, "partial OT");
    check_cost(C, a.size(), b.size());
    if (C.minCoeff() < 0.0) throw Error("partial OT: negative cost");
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw Error("partial OT: alpha must be positive");
    const double limit = std::min(span_total(a), span_total(b));
    if (alpha > limit * (1.0 + 1e-12) + 1e-15)
        throw Error("partial OT infeasible: alpha exceeds the smaller total mass");
}

inline TransportPlan make_plan(Matrix m, std::span<const double> a, std::span<const double> b, double alpha)
{
    TransportPlan p;
    p.matrix = std::move(m);
    p.row_caps.assign(a.begin(), a.end());
    p.col_caps.assign(b.begin(), b.end());
    p.mass = alpha;
    return p;
}

}  // namespace detail

/// Exact solver. Adds a dummy row absorbing total(b) - alpha and a dummy
/// column absorbing total(a) - alpha (zero cost), with a prohibitive cost on
/// the dummy-dummy cell, then solves the balanced problem and strips dummies.
inline PartialOtResult exact_partial_ot(std::span<const double> a, std::span<const double> b,
                                        const Matrix& C, double alpha)
{
    detail::check_partial_instance(a, b, C, alpha);
    const auto m = static_cast<Eigen::Index>(a.size());
    const auto n = static_cast<Eigen::Index>(b.size());
    const double total_a = detail::span_total(a);
    const double total_b = detail::span_total(b);

    std::vector<double> ext_a(a.begin(), a.end());
    std::vector<double> ext_b(b.begin(), b.end());
    ext_a.push_back(std::max(0.0, total_b - alpha));
    ext_b.push_back(std::max(0.0, total_a - alpha));
    // Rebalance rounding so both sides agree exactly up to representation.
    const double ta = detail::span_total(ext_a);
    const double tb = detail::span_total(ext_b);
    if (ta > tb) ext_b.back() += ta - tb;
    else ext_a.back() += tb - ta;

    const double big = 2.0 * static_cast<double>(m + n) * C.maxCoeff() + 1.0;
    Matrix ext = Matrix::Zero(m + 1, n + 1);
    ext.topLeftCorner(m, n) = C;
    ext(m, n) = big;

    const BalancedSolution sol = solve_balanced_transport(ext_a, ext_b, ext);
    PartialOtResult r;
    r.plan = detail::make_plan(sol.flow.topLeftCorner(m, n), a, b, alpha);
    r.cost = r.plan.cost(C);
    return r;
}

/// Entropic solver: Dykstra-corrected iterated Bregman projections onto the
/// row-cap, column-cap and total-mass sets, starting from exp(-C / eps).
inline PartialOtResult entropic_partial_ot(std::span<const double> a, std::span<const double> b,
                                           const Matrix& C, double alpha, const SolverConfig& cfg)
{
    detail::check_partial_instance(a, b, C, alpha);
    cfg.validate();
    const auto m = C.rows();
    const auto n = C.cols();
    // The total mass is fixed, so shifting C by a constant leaves the plan unchanged.
    const double cmin = C.minCoeff();
    const double spread = (C.maxCoeff() - cmin) / cfg.epsilon;
    if (spread > 700.0)
        throw Error("entropic partial OT: exp(-C/eps) underflows; increase epsilon or rescale the cost (spread " +
                    std::to_string(spread) + ")");

    const Eigen::Map<const Vector> av(a.data(), m);
    const Eigen::Map<const Vector> bv(b.data(), n);

    Matrix K = (-(C.array() - cmin) / cfg.epsilon).exp().matrix();
    K *= alpha / K.sum();
    Matrix q1 = Matrix::Ones(m, n), q2 = Matrix::Ones(m, n), q3 = Matrix::Ones(m, n);

    // Dykstra corrections: q <- q * (iterate before the step) / (after the step).
    auto correct = [](Matrix& q, const Matrix& before, const Matrix& after) {
        q = (after.array() > 0.0).select(q.array() * before.array() / after.array(), 1.0);
    };
    // Entries below this floor carry no material mass; relative change is
    // measured against it so geometrically growing entries are not mistaken
    // for a converged plan.
    const double floor = 1e-12 * alpha;

    PartialOtResult r;
    r.converged = false;
    for (int it = 0; it < cfg.max_iter; ++it) {
        const Matrix prev = K;

        Matrix k0 = K.cwiseProduct(q1);
        const Vector rs = k0.rowwise().sum();
        const Vector rscale = (rs.array() > 0.0).select((av.array() / rs.array()).min(1.0), 0.0);
        const Matrix k1 = rscale.asDiagonal() * k0;
        correct(q1, prev, k1);

        const Matrix k1q = k1.cwiseProduct(q2);
        const Vector cs = k1q.colwise().sum().transpose();
        const Vector cscale = (cs.array() > 0.0).select((bv.array() / cs.array()).min(1.0), 0.0);
        const Matrix k2 = k1q * cscale.asDiagonal();
        correct(q2, k1, k2);

        const Matrix k2q = k2.cwiseProduct(q3);
        const double total = k2q.sum();
        if (!(total > 0.0) || !std::isfinite(total))
            throw Error("entropic partial OT: numerical breakdown; increase epsilon");
        K = k2q * (alpha / total);
        correct(q3, k2, K);

        r.iterations = it + 1;
        const double change =
            ((K - prev).array().abs() / prev.array().max(floor)).maxCoeff();
        // A stalled iterate is not enough: the correction terms can leave K
        // unchanged over one cycle while the caps are still violated.
        if (change < cfg.tol) {
            const double viol = std::max((K.rowwise().sum() - av).maxCoeff(),
                                         (K.colwise().sum().transpose() - bv).maxCoeff());
            if (viol > cfg.tol * std::max(1.0, alpha)) continue;
            r.converged = true;
            break;
        }
    }
    if (!K.allFinite()) throw Error("entropic partial OT: non-finite plan; increase epsilon");
    r.plan = detail::make_plan(std::move(K), a, b, alpha);
    r.cost = r.plan.cost(C);
    return r;
}

/// Vertex enumeration of the feasible polytope; a test oracle for tiny instances.
inline PartialOtResult brute_force_partial_ot(std::span<const double> a, std::span<const double> b,
                                              const Matrix& C, double alpha)
{
    detail::check_partial_instance(a, b, C, alpha);
    const auto m = C.rows();
    const auto n = C.cols();
    const int nv = static_cast<int>(m * n);
    if (nv > 6) throw Error("brute force: instance too large (more than 6 plan variables)");

    // Inequalities g(x) <= h as rows of G: -x_k <= 0, row sums <= a, col sums <= b.
    const int n_ineq = nv + static_cast<int>(m + n);
    Matrix G = Matrix::Zero(n_ineq, nv);
    Vector h = Vector::Zero(n_ineq);
    for (int k = 0; k < nv; ++k) G(k, k) = -1.0;
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) G(nv + i, i * n + j) = 1.0;
        h(nv + i) = a[static_cast<std::size_t>(i)];
    }
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = 0; i < m; ++i) G(nv + m + j, i * n + j) = 1.0;
        h(nv + m + j) = b[static_cast<std::size_t>(j)];
    }

    double best = std::numeric_limits<double>::infinity();
    Vector best_x;
    for (std::uint32_t mask = 0; mask < (1u << n_ineq); ++mask) {
        if (std::popcount(mask) != nv - 1) continue;
        Matrix A(nv, nv);
        Vector rhs(nv);
        A.row(0).setOnes();
        rhs(0) = alpha;
        int r = 1;
        for (int k = 0; k < n_ineq; ++k) {
            if (mask & (1u << k)) {
                A.row(r) = G.row(k);
                rhs(r) = h(k);
                ++r;
            }
        }
        Eigen::FullPivLU<Matrix> lu(A);
        if (lu.rank() < nv) continue;
        const Vector x = lu.solve(rhs);
        if (((G * x - h).array() > 1e-10).any()) continue;
        double cost = 0.0;
        for (int k = 0; k < nv; ++k) cost += C(k / n, k % n) * x(k);
        if (cost < best) best = cost, best_x = x;
    }
    if (!std::isfinite(best)) throw Error("brute force: no feasible vertex");

    Matrix P(m, n);
    for (int k = 0; k < nv; ++k) P(k / n, k % n) = std::max(0.0, best_x(k));
    PartialOtResult res;
    res.plan = detail::make_plan(std::move(P), a, b, alpha);
    res.cost = best;
    return res;
}

inline PartialOtResult solve_partial_ot(std::span<const double> a, std::span<const double> b,
                                        const Matrix& C, double alpha, OtMethod method,
                                        const SolverConfig& cfg = {})
{
    return method == OtMethod::exact ? exact_partial_ot(a, b, C, alpha)
                                     : entropic_partial_ot(a, b, C, alpha, cfg);
}

/// PW_alpha(a, b) = sum_ij C_ij P_ij for the plan returned by the chosen solver.
inline double pw_distance(std::span<const double> a, std::span<const double> b, const Matrix& C,
                          double alpha, OtMethod method, const SolverConfig& cfg = {})
{
    return solve_partial_ot(a, b, C, alpha, method, cfg).cost;
}

}  // namespace potpda
