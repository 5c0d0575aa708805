#pragma once

// Randomised checks shared by the unit tests and the acceptance runner.

#include <algorithm>
#include <cmath>
#include <random>

#include "potpda/warmpot.hpp"

namespace checks {

using namespace potpda;

inline Batch random_batch(std::mt19937_64& rng, int m, int n, int d, int K)
{
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_int_distribution<int> lab(0, K - 1);
    Batch b;
    auto pt = [&] {
        Vector v(d);
        for (int t = 0; t < d; ++t) v(t) = g(rng);
        return v;
    };
    for (int i = 0; i < m; ++i) b.xs.push_back(pt()), b.ys.push_back(lab(rng));
    for (int j = 0; j < n; ++j) b.xt.push_back(pt());
    return b;
}

inline ModelParams random_params(std::mt19937_64& rng, int d, int k, int K)
{
    std::normal_distribution<double> g(0.0, 0.7);
    ModelParams p;
    p.feature = Matrix(k, d);
    p.classifier = Matrix(K, k);
    p.bias = Vector(K);
    for (Eigen::Index i = 0; i < p.feature.size(); ++i) p.feature.data()[i] = g(rng);
    for (Eigen::Index i = 0; i < p.classifier.size(); ++i) p.classifier.data()[i] = g(rng);
    for (Eigen::Index i = 0; i < K; ++i) p.bias(i) = g(rng);
    return p;
}

/// Largest relative error between the analytic gradient and central finite
/// differences of the fixed-plan objective, over every parameter entry.
/// Relative to max(|analytic|, |numeric|, 1e-3) so near-zero entries do not blow up.
inline double fd_gradient_error(const ModelParams& p, const Batch& b, const Matrix& plan,
                                const std::vector<double>& w, const TrainConfig& cfg, double h = 1e-5)
{
    Gradient g;
    fixed_plan_objective(p, b, plan, w, cfg, &g);
    double worst = 0.0;
    auto probe = [&](auto member, const auto& analytic) {
        for (Eigen::Index i = 0; i < analytic.size(); ++i) {
            ModelParams hi = p, lo = p;
            (hi.*member).data()[i] += h;
            (lo.*member).data()[i] -= h;
            const double num = (fixed_plan_objective(hi, b, plan, w, cfg).value() -
                                fixed_plan_objective(lo, b, plan, w, cfg).value()) /
                               (2.0 * h);
            const double an = analytic.data()[i];
            worst = std::max(worst, std::abs(num - an) / std::max({std::abs(an), std::abs(num), 1e-3}));
        }
    };
    probe(&ModelParams::feature, g.feature);
    probe(&ModelParams::classifier, g.classifier);
    probe(&ModelParams::bias, g.bias);
    return worst;
}

/// Random batch, random model, plan from the entropic solver on the batch cost.
inline double random_gradient_check(std::mt19937_64& rng, const TrainConfig& base)
{
    std::uniform_int_distribution<int> sz(3, 9), dim(1, 4), cls(2, 5);
    const int m = sz(rng), n = sz(rng), d = dim(rng), k = dim(rng), K = cls(rng);
    const Batch b = random_batch(rng, m, n, d, K);
    const ModelParams p = random_params(rng, d, k, K);
    TrainConfig cfg = base;
    const Matrix C = warmpot_cost(p, b, cfg);
    cfg.epsilon = 0.1 * (C.maxCoeff() - C.minCoeff()) + 1e-3;
    const auto e = warmpot_objective(p, b, 0.5, cfg);
    return fd_gradient_error(p, b, e.ot.plan.matrix, e.p_hat.values, cfg);
}

/// With eta2 = 0 the optimal alignment equals eta1 * PW over feature distances.
inline double eta2_zero_gap(std::mt19937_64& rng)
{
    std::uniform_int_distribution<int> sz(2, 8), dim(1, 4);
    std::uniform_real_distribution<double> u(0.05, 1.0);
    const int m = sz(rng), n = sz(rng), d = dim(rng), k = dim(rng), K = 3;
    const Batch b = random_batch(rng, m, n, d, K);
    const ModelParams p = random_params(rng, d, k, K);
    TrainConfig cfg;
    cfg.eta2 = 0.0;
    cfg.eta1 = 0.1 + 2.0 * u(rng);
    cfg.beta = u(rng);
    const double alpha = feasible_alpha(u(rng), cfg.beta);
    const auto a = uniform_masses(b.xs.size(), 1.0 / cfg.beta);
    const auto q = uniform_masses(b.xt.size(), 1.0);
    const auto plan = exact_partial_ot(a, q, warmpot_cost(p, b, cfg), alpha).plan.matrix;
    const std::vector<double> zero(b.xs.size(), 0.0);
    const double align = fixed_plan_objective(p, b, plan, zero, cfg).alignment;

    std::vector<Vector> fs, ft;
    for (const auto& x : b.xs) fs.push_back(p.features(x));
    for (const auto& x : b.xt) ft.push_back(p.features(x));
    const double pw = pw_distance(a, q, feature_cost_matrix(fs, ft, 1.0).entries, alpha, OtMethod::exact);
    return std::abs(align - cfg.eta1 * pw);
}

}  // namespace checks
