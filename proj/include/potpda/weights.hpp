#pragma once

// Source/target weights read off transport plans, the TV correction term and
// the competing weighting schemes (uniform, BA3US class counts, ARPM).

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "measures.hpp"
#include "pot.hpp"
#include "transport.hpp"

namespace potpda {

enum class Scheme { warmpot, uniform, ba3us, arpm };

inline std::string to_string(Scheme s)
{
    switch (s) {
    case Scheme::warmpot: return "warmpot";
    case Scheme::uniform: return "uniform";
    case Scheme::ba3us: return "ba3us";
    case Scheme::arpm: return "arpm";
    }
    return "?";
}

inline Scheme scheme_from_string(const std::string& s)
{
    if (s == "warmpot") return Scheme::warmpot;
    if (s == "uniform") return Scheme::uniform;
    if (s == "ba3us") return Scheme::ba3us;
    if (s == "arpm") return Scheme::arpm;
    throw Error("unknown weighting scheme '" + s + "'");
}

struct WeightVector {
    std::vector<double> values;
    double normalizer = 1.0;
    Scheme scheme = Scheme::warmpot;

    double sum() const { return std::accumulate(values.begin(), values.end(), 0.0); }
    std::size_t size() const { return values.size(); }
};

struct MarginalWeights {
    WeightVector p;  // row sums
    WeightVector q;  // column sums
};

inline MarginalWeights marginal_weights(const TransportPlan& plan)
{
    const Vector r = plan.row_sums();
    const Vector c = plan.col_sums();
    MarginalWeights w;
    w.p.values.assign(r.data(), r.data() + r.size());
    w.q.values.assign(c.data(), c.data() + c.size());
    w.p.normalizer = w.q.normalizer = plan.mass;
    return w;
}

/// (1/2) sum_j |1/n_t - q_j / alpha|.
inline double tv_term(const WeightVector& q, double alpha, std::size_t n_t)
{
    if (!(alpha > 0.0)) throw Error("tv_term: alpha must be positive");
    if (q.size() != n_t) throw Error("tv_term: weight vector length differs from n_t");
    const double u = 1.0 / static_cast<double>(n_t);
    double s = 0.0;
    for (double qj : q.values) s += std::abs(u - qj / alpha);
    return 0.5 * s;
}

/// Rescales p_i by beta * n_s so a source atom used at full capacity maps to 1.
inline WeightVector normalized_source_weights(const WeightVector& p, double beta, std::size_t n_s)
{
    if (!(beta > 0.0) || beta > 1.0) throw Error("normalized weights: beta must lie in (0, 1]");
    if (p.size() != n_s) throw Error("normalized weights: length differs from n_s");
    const double scale = beta * static_cast<double>(n_s);
    WeightVector out = p;
    out.normalizer = 1.0 / scale;
    for (double& v : out.values) {
        v *= scale;
        if (v > 1.0 + 1e-6 || v < -1e-9)
            throw Error("normalized weights: source cap violated (infeasible plan upstream)");
        v = std::clamp(v, 0.0, 1.0);
    }
    return out;
}

inline WeightVector scheme_uniform(std::size_t n_s)
{
    if (n_s == 0) throw Error("uniform scheme: n_s must be >= 1");
    return {std::vector<double>(n_s, 1.0 / static_cast<double>(n_s)), 1.0, Scheme::uniform};
}

/// Weight of source i = share of target predictions equal to y_i.
inline WeightVector scheme_ba3us(std::span<const int> target_predictions, std::span<const int> source_labels,
                                 std::size_t n_t)
{
    if (n_t == 0) throw Error("ba3us scheme: n_t must be >= 1");
    std::map<int, std::size_t> counts;
    for (int c : target_predictions) ++counts[c];
    WeightVector w;
    w.scheme = Scheme::ba3us;
    w.normalizer = static_cast<double>(n_t);
    w.values.reserve(source_labels.size());
    for (int y : source_labels) {
        const auto it = counts.find(y);
        w.values.push_back(it == counts.end() ? 0.0
                                              : static_cast<double>(it->second) / static_cast<double>(n_t));
    }
    return w;
}

// ---------------------------------------------------------------------------
// Projections used by the ARPM weights.

/// Euclidean projection onto the probability simplex (sort-based).
inline Vector project_simplex(const Vector& y)
{
    const auto n = y.size();
    std::vector<double> s(y.data(), y.data() + n);
    std::sort(s.begin(), s.end(), std::greater<>());
    double running = 0.0, theta = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) {
        running += s[static_cast<std::size_t>(k)];
        const double t = (running - 1.0) / static_cast<double>(k + 1);
        if (s[static_cast<std::size_t>(k)] - t > 0.0) theta = t;
    }
    return (y.array() - theta).max(0.0).matrix();
}

/// Projection onto {sum p = 1} intersected with the ball ||p - 1/n||^2 <= radius_sq.
inline Vector project_centered_ball(const Vector& y, double radius_sq)
{
    const auto n = static_cast<double>(y.size());
    const Vector center = Vector::Constant(y.size(), 1.0 / n);
    Vector d = (y.array() - y.mean()).matrix();  // offset from the centre within the hyperplane
    const double r = std::sqrt(std::max(0.0, radius_sq));
    const double norm = d.norm();
    if (norm > r) d *= (norm > 0.0 ? r / norm : 0.0);
    return center + d;
}

/// Dykstra alternating projection onto simplex intersected with the ball, then a
/// radial pull toward the centre to restore exact feasibility.
inline Vector project_simplex_ball(const Vector& y, double radius_sq, int rounds = 100, double move_tol = 1e-10)
{
    const auto n = y.size();
    const Vector center = Vector::Constant(n, 1.0 / static_cast<double>(n));
    Vector x = y;
    Vector p = Vector::Zero(n), q = Vector::Zero(n);
    for (int k = 0; k < rounds; ++k) {
        const Vector s = project_simplex(x + p);
        p = x + p - s;
        const Vector next = project_centered_ball(s + q, radius_sq);
        q = s + q - next;
        const double moved = (next - x).cwiseAbs().maxCoeff();
        x = next;
        if (moved < move_tol) break;
    }
    // x lies on the hyperplane and inside the ball; shrink toward the centre
    // just enough to clear any residual negativity.
    double theta = 1.0;
    for (Eigen::Index i = 0; i < n; ++i)
        if (x(i) < 0.0) theta = std::min(theta, center(i) / (center(i) - x(i)));
    return center + theta * (x - center);
}

/// W1 between sum_i p_i delta_{s_i} and the uniform measure on the targets,
/// for cost matrix C (Euclidean distances).
inline double weighted_w1(std::span<const double> p, const Matrix& C)
{
    const auto b = uniform_masses(static_cast<std::size_t>(C.cols()), 1.0);
    return solve_balanced_transport(p, b, C).cost;
}

struct ArpmConfig {
    double rho = 0.5;
    int subgradient_steps = 300;
    double step_size = 0.05;

    bool operator==(const ArpmConfig&) const = default;

    void validate() const
    {
        if (!(rho >= 0.0)) throw Error("arpm: rho must be nonnegative");
        if (subgradient_steps < 1) throw Error("arpm: subgradient_steps must be >= 1");
        if (!(step_size > 0.0)) throw Error("arpm: step_size must be positive");
    }
};

/// Projected subgradient on p -> W1(p, uniform target) over the chi-square
/// ball constraint set. Subgradients are optimal dual row potentials; the best
/// iterate (starting from uniform) is returned.
inline WeightVector scheme_arpm(std::span<const Vector> source_feats, std::span<const Vector> target_feats,
                                const ArpmConfig& cfg)
{
    cfg.validate();
    if (source_feats.empty() || target_feats.empty()) throw Error("arpm: empty feature set");
    const Matrix C = feature_cost_matrix(source_feats, target_feats, 1.0).entries;
    const auto n_s = source_feats.size();
    const auto b = uniform_masses(target_feats.size(), 1.0);
    const double radius_sq = cfg.rho / static_cast<double>(n_s);

    Vector p = Vector::Constant(static_cast<Eigen::Index>(n_s), 1.0 / static_cast<double>(n_s));
    Vector best = p;
    double best_value = std::numeric_limits<double>::infinity();
    if (radius_sq > 0.0) {
        for (int k = 0; k < cfg.subgradient_steps; ++k) {
            std::vector<double> pv(p.data(), p.data() + p.size());
            const double total = std::accumulate(pv.begin(), pv.end(), 0.0);
            for (double& v : pv) v /= total;
            const BalancedSolution sol = solve_balanced_transport(pv, b, C);
            if (sol.cost < best_value) best_value = sol.cost, best = p;
            Vector g = sol.u.array() - sol.u.mean();
            const double gn = g.norm();
            if (gn <= 1e-15) break;
            const double step = cfg.step_size / std::sqrt(static_cast<double>(k + 1));
            p = project_simplex_ball(p - step * g / gn, radius_sq);
        }
        std::vector<double> pv(p.data(), p.data() + p.size());
        const double last = weighted_w1(pv, C);
        if (last < best_value) best = p;
    }
    WeightVector w;
    w.scheme = Scheme::arpm;
    w.normalizer = 1.0;
    w.values.assign(best.data(), best.data() + best.size());
    return w;
}

/// Minimiser of W1 to the uniform target over the capped simplex
/// {p >= 0, sum p = 1, p_i <= 1/(beta n_s)}, read off the alpha = 1 partial plan
/// between (1/beta) * uniform source and the uniform target.
inline WeightVector gamma_constrained_weights(std::span<const Vector> source_feats,
                                              std::span<const Vector> target_feats, double beta)
{
    if (!(beta > 0.0) || beta > 1.0) throw Error("gamma weights: beta must lie in (0, 1]");
    if (source_feats.empty() || target_feats.empty()) throw Error("gamma weights: empty feature set");
    const Matrix C = feature_cost_matrix(source_feats, target_feats, 1.0).entries;
    const auto a = uniform_masses(source_feats.size(), 1.0 / beta);
    const auto b = uniform_masses(target_feats.size(), 1.0);
    const auto r = exact_partial_ot(a, b, C, 1.0);
    WeightVector w = marginal_weights(r.plan).p;
    w.scheme = Scheme::warmpot;
    return w;
}

/// Counts of values in equal-width bins on [0, 1]; 1.0 lands in the last bin.
inline std::vector<std::size_t> weight_histogram(std::span<const double> values, std::size_t bins = 20)
{
    if (bins == 0) throw Error("histogram: bins must be >= 1");
    std::vector<std::size_t> counts(bins, 0);
    for (double v : values) {
        const double c = std::clamp(v, 0.0, 1.0);
        auto k = static_cast<std::size_t>(c * static_cast<double>(bins));
        if (k >= bins) k = bins - 1;
        ++counts[k];
    }
    return counts;
}

}  // namespace potpda
