#pragma once

// Minibatch training with a linear feature map and a softmax head: each step
// solves an entropic partial OT between the (1/beta)-scaled source batch and
// the target batch, freezes the plan, and takes one gradient step on
//   sum_i p_i CE(w(x_i), y_i) + sum_ij P_ij (eta1 ||f(x_i) - f(x~_j)|| + eta2 CE(y_i, w(x~_j))).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "measures.hpp"
#include "pot.hpp"
#include "weights.hpp"

namespace potpda {

struct TrainConfig {
    double alpha_max = 0.8;
    int ramp_iters = 2500;
    int total_iters = 5000;
    double beta = 0.35;
    double eta1 = 0.125;
    double eta2 = 1.75;
    double epsilon = 7.0;
    double lr = 0.001;
    int batch_size = 65;
    std::uint64_t seed = 0;
    int feature_dim = 0;  // 0: same as the input dimension
    Scheme scheme = Scheme::warmpot;
    int weight_update_interval = 500;  // ba3us / arpm refresh period
    int solver_max_iter = 5000;
    double solver_tol = 1e-9;
    double init_scale = 0.01;
    ArpmConfig arpm{};

    bool operator==(const TrainConfig&) const = default;

    void validate() const
    {
        if (!(alpha_max > 0.0) || alpha_max > 1.0) throw Error("train: alpha_max must lie in (0, 1]");
        if (ramp_iters < 1) throw Error("train: ramp_iters must be >= 1");
        if (total_iters < 1) throw Error("train: total_iters must be >= 1");
        if (ramp_iters > total_iters) throw Error("train: ramp_iters must not exceed total_iters");
        if (!(beta > 0.0) || beta > 1.0) throw Error("train: beta must lie in (0, 1]");
        if (!(eta1 >= 0.0) || !(eta2 >= 0.0)) throw Error("train: eta1 and eta2 must be nonnegative");
        if (!(epsilon > 0.0)) throw Error("train: epsilon must be positive");
        if (!(lr > 0.0)) throw Error("train: lr must be positive");
        if (batch_size < 1) throw Error("train: batch_size must be >= 1");
        if (feature_dim < 0) throw Error("train: feature_dim must be >= 0");
        if (weight_update_interval < 1) throw Error("train: weight_update_interval must be >= 1");
        if (!(init_scale >= 0.0)) throw Error("train: init_scale must be nonnegative");
        solver().validate();
        arpm.validate();
    }

    SolverConfig solver() const { return {epsilon, solver_max_iter, solver_tol}; }
};

struct ModelParams {
    Matrix feature;     // k x d
    Matrix classifier;  // K x k
    Vector bias;        // K

    bool finite() const { return feature.allFinite() && classifier.allFinite() && bias.allFinite(); }
    Vector features(const Vector& x) const { return feature * x; }
    Vector logits(const Vector& x) const { return classifier * (feature * x) + bias; }
};

/// W_f = I (padded or truncated) plus noise, small random head.
inline ModelParams init_params(Eigen::Index d, Eigen::Index k, Eigen::Index n_classes, std::uint64_t seed,
                               double scale)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    ModelParams p;
    p.feature = Matrix::Identity(k, d);
    for (Eigen::Index r = 0; r < k; ++r)
        for (Eigen::Index c = 0; c < d; ++c) p.feature(r, c) += scale * normal(rng);
    p.classifier.resize(n_classes, k);
    for (Eigen::Index r = 0; r < n_classes; ++r)
        for (Eigen::Index c = 0; c < k; ++c) p.classifier(r, c) = scale * normal(rng);
    p.bias = Vector::Zero(n_classes);
    return p;
}

/// 0.01 + (alpha_max - 0.01) * min(iter / ramp, 1).
inline double alpha_schedule(int iter, const TrainConfig& cfg)
{
    const double t = std::min(static_cast<double>(iter) / static_cast<double>(cfg.ramp_iters), 1.0);
    return 0.01 + (cfg.alpha_max - 0.01) * t;
}

struct Batch {
    std::vector<Vector> xs;
    std::vector<int> ys;
    std::vector<Vector> xt;
};

namespace detail {

inline Vector log_softmax(const Vector& z)
{
    const double mx = z.maxCoeff();
    const double lse = mx + std::log((z.array() - mx).exp().sum());
    return (z.array() - lse).matrix();
}

inline int class_id(double y)
{
    const double r = std::round(y);
    if (r != y || r < 0.0) throw Error("training needs nonnegative integral class labels");
    return static_cast<int>(r);
}

inline void check_batch(const Batch& b, const ModelParams& p)
{
    if (b.xs.empty() || b.xt.empty()) throw Error("empty batch");
    if (b.ys.size() != b.xs.size()) throw Error("batch: label count mismatch");
    for (int y : b.ys)
        if (y < 0 || y >= p.bias.size()) throw Error("batch: label outside the classifier range");
}

}  // namespace detail

/// c_ij = eta1 ||f(x_i) - f(x~_j)|| + eta2 * (-log softmax(w(x~_j))[y_i]).
inline Matrix warmpot_cost(const ModelParams& p, const Batch& b, const TrainConfig& cfg)
{
    detail::check_batch(b, p);
    const auto m = static_cast<Eigen::Index>(b.xs.size());
    const auto n = static_cast<Eigen::Index>(b.xt.size());
    std::vector<Vector> fs, ft, lt;
    for (const auto& x : b.xs) fs.push_back(p.features(x));
    for (const auto& x : b.xt) {
        ft.push_back(p.features(x));
        lt.push_back(detail::log_softmax(p.classifier * ft.back() + p.bias));
    }
    Matrix C(m, n);
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            C(i, j) = cfg.eta1 * (fs[static_cast<std::size_t>(i)] - ft[static_cast<std::size_t>(j)]).norm() -
                      cfg.eta2 * lt[static_cast<std::size_t>(j)](b.ys[static_cast<std::size_t>(i)]);
    return C;
}

struct Gradient {
    Matrix feature;
    Matrix classifier;
    Vector bias;
};

struct ObjectiveParts {
    double source_loss = 0.0;  // sum_i w_i CE(w(x_i), y_i)
    double alignment = 0.0;    // sum_ij P_ij c_ij
    double value() const { return source_loss + alignment; }
};

/// Objective with the plan and the source weights held fixed; fills `grad`
/// when given. The feature-distance subgradient is taken as 0 at coincident points.
inline ObjectiveParts fixed_plan_objective(const ModelParams& p, const Batch& b, const Matrix& plan,
                                           std::span<const double> source_weights, const TrainConfig& cfg,
                                           Gradient* grad = nullptr)
{
    detail::check_batch(b, p);
    const auto m = b.xs.size();
    const auto n = b.xt.size();
    if (plan.rows() != static_cast<Eigen::Index>(m) || plan.cols() != static_cast<Eigen::Index>(n))
        throw Error("objective: plan shape does not match the batch");
    if (source_weights.size() != m) throw Error("objective: weight count does not match the batch");
    const auto k = p.feature.rows();
    const auto K = p.classifier.rows();

    std::vector<Vector> fs(m), ft(n), ls(m), lt(n);
    for (std::size_t i = 0; i < m; ++i) {
        fs[i] = p.features(b.xs[i]);
        ls[i] = detail::log_softmax(p.classifier * fs[i] + p.bias);
    }
    for (std::size_t j = 0; j < n; ++j) {
        ft[j] = p.features(b.xt[j]);
        lt[j] = detail::log_softmax(p.classifier * ft[j] + p.bias);
    }

    std::vector<Vector> dfs, dft, dzs, dzt;
    if (grad) {
        dfs.assign(m, Vector::Zero(k));
        dft.assign(n, Vector::Zero(k));
        dzs.assign(m, Vector::Zero(K));
        dzt.assign(n, Vector::Zero(K));
    }

    ObjectiveParts parts;
    for (std::size_t i = 0; i < m; ++i) {
        const double w = source_weights[i];
        parts.source_loss -= w * ls[i](b.ys[i]);
        if (grad) {
            dzs[i] = w * ls[i].array().exp().matrix();
            dzs[i](b.ys[i]) -= w;
        }
    }
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const double pij = plan(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            if (pij == 0.0) continue;
            const Vector diff = fs[i] - ft[j];
            const double dist = diff.norm();
            parts.alignment += pij * (cfg.eta1 * dist - cfg.eta2 * lt[j](b.ys[i]));
            if (!grad) continue;
            if (dist > 0.0) {
                const Vector g = (cfg.eta1 * pij / dist) * diff;
                dfs[i] += g;
                dft[j] -= g;
            }
            // d/dz~_j of -log softmax(z~_j)[y_i] = softmax(z~_j) - e_{y_i}
            dzt[j] += (cfg.eta2 * pij) * lt[j].array().exp().matrix();
            dzt[j](b.ys[i]) -= cfg.eta2 * pij;
        }
    }

    if (grad) {
        grad->feature = Matrix::Zero(k, p.feature.cols());
        grad->classifier = Matrix::Zero(K, k);
        grad->bias = Vector::Zero(K);
        auto backprop = [&](const Vector& x, const Vector& f, const Vector& dz, const Vector& df) {
            grad->classifier += dz * f.transpose();
            grad->bias += dz;
            grad->feature += (p.classifier.transpose() * dz + df) * x.transpose();
        };
        for (std::size_t i = 0; i < m; ++i) backprop(b.xs[i], fs[i], dzs[i], dfs[i]);
        for (std::size_t j = 0; j < n; ++j) backprop(b.xt[j], ft[j], dzt[j], dft[j]);
    }
    return parts;
}

struct WarmpotEval {
    ObjectiveParts parts;
    PartialOtResult ot;
    WeightVector p_hat;
    double alpha = 0.0;  // after clamping
    bool alpha_clamped = false;
};

/// Largest alpha the batch measures admit: min(1/beta, 1).
inline double feasible_alpha(double alpha, double beta, bool* clamped = nullptr)
{
    const double cap = std::min(1.0 / beta, 1.0);
    if (clamped) *clamped = alpha > cap;
    return std::min(alpha, cap);
}

/// Solves the batch plan and evaluates the objective with source weights p_hat.
inline WarmpotEval warmpot_objective(const ModelParams& p, const Batch& b, double alpha, const TrainConfig& cfg)
{
    detail::check_batch(b, p);
    WarmpotEval e;
    e.alpha = feasible_alpha(alpha, cfg.beta, &e.alpha_clamped);
    const Matrix C = warmpot_cost(p, b, cfg);
    const auto a = uniform_masses(b.xs.size(), 1.0 / cfg.beta);
    const auto q = uniform_masses(b.xt.size(), 1.0);
    e.ot = entropic_partial_ot(a, q, C, e.alpha, cfg.solver());
    e.p_hat = marginal_weights(e.ot.plan).p;
    e.parts = fixed_plan_objective(p, b, e.ot.plan.matrix, e.p_hat.values, cfg);
    return e;
}

inline void apply_gradient(ModelParams& p, const Gradient& g, double lr)
{
    if (!(g.feature.allFinite() && g.classifier.allFinite() && g.bias.allFinite())) {
        std::ostringstream os;
        os << "non-finite gradient; |dWf|=" << g.feature.norm() << " |dWg|=" << g.classifier.norm()
           << " |db|=" << g.bias.norm() << " params finite=" << p.finite();
        throw Error(os.str());
    }
    p.feature -= lr * g.feature;
    p.classifier -= lr * g.classifier;
    p.bias -= lr * g.bias;
}

struct StepResult {
    WarmpotEval eval;
    std::vector<double> source_weights;  // weights actually used for the source loss
};

/// One alternating step. `override_weights`, when given, replaces p_hat in the
/// source loss (rescaled to total alpha); the alignment term is unchanged.
inline StepResult warmpot_step(ModelParams& p, const Batch& b, double alpha, const TrainConfig& cfg,
                               std::optional<std::span<const double>> override_weights = std::nullopt)
{
    StepResult r;
    r.eval = warmpot_objective(p, b, alpha, cfg);
    if (override_weights) {
        if (override_weights->size() != b.xs.size()) throw Error("step: weight count does not match the batch");
        double total = 0.0;
        for (double w : *override_weights) total += w;
        r.source_weights.assign(override_weights->begin(), override_weights->end());
        if (total > 0.0)
            for (double& w : r.source_weights) w *= r.eval.alpha / total;
        else
            r.source_weights.assign(b.xs.size(), r.eval.alpha / static_cast<double>(b.xs.size()));
    } else {
        r.source_weights = r.eval.p_hat.values;
    }
    Gradient g;
    r.eval.parts = fixed_plan_objective(p, b, r.eval.ot.plan.matrix, r.source_weights, cfg, &g);
    apply_gradient(p, g, cfg.lr);
    return r;
}

// ---------------------------------------------------------------------------
// Training loop.

struct TraceRow {
    int iter = 0;
    double alpha = 0.0;
    double objective = 0.0;
    double source_loss = 0.0;
    double alignment = 0.0;
    double plan_mass = 0.0;
    bool converged = true;
    int solver_iters = 0;
    double outlier_share = std::numeric_limits<double>::quiet_NaN();  // needs hidden labels
};

struct TrainResult {
    ModelParams params;
    std::vector<TraceRow> trace;
    int nonconverged_steps = 0;
    int clamped_steps = 0;
};

inline Eigen::Index class_count(const PdaDataset& data)
{
    int mx = 0;
    for (const auto& s : data.source) mx = std::max(mx, detail::class_id(s.y));
    return mx + 1;
}

/// Source classes absent from the hidden target labels (empty without them).
inline std::set<int> outlier_classes(const PdaDataset& data)
{
    std::set<int> out;
    if (!data.has_hidden_labels()) return out;
    std::set<int> tgt;
    for (double y : data.target_labels_hidden) tgt.insert(detail::class_id(y));
    for (const auto& s : data.source)
        if (!tgt.contains(detail::class_id(s.y))) out.insert(detail::class_id(s.y));
    return out;
}

inline std::vector<int> predict_classes(const ModelParams& p, std::span<const Vector> xs)
{
    std::vector<int> out;
    out.reserve(xs.size());
    for (const auto& x : xs) {
        Eigen::Index k;
        p.logits(x).maxCoeff(&k);
        out.push_back(static_cast<int>(k));
    }
    return out;
}

inline double target_accuracy(const ModelParams& p, const PdaDataset& data)
{
    if (!data.has_hidden_labels()) throw Error("accuracy needs hidden target labels");
    const auto pred = predict_classes(p, data.target_inputs);
    std::size_t hit = 0;
    for (std::size_t j = 0; j < pred.size(); ++j) hit += pred[j] == detail::class_id(data.target_labels_hidden[j]);
    return static_cast<double>(hit) / static_cast<double>(pred.size());
}

namespace detail {

/// `count` distinct indices from [0, n) (all of them, shuffled, when count >= n).
inline std::vector<std::size_t> draw_indices(std::size_t n, std::size_t count, std::mt19937_64& rng)
{
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    const std::size_t c = std::min(count, n);
    for (std::size_t i = 0; i < c; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, n - 1);
        std::swap(idx[i], idx[pick(rng)]);
    }
    idx.resize(c);
    return idx;
}

}  // namespace detail

/// Full-dataset source weights for a non-warmpot scheme under the current model.
inline std::vector<double> scheme_dataset_weights(Scheme scheme, const ModelParams& p, const PdaDataset& data,
                                                  const TrainConfig& cfg)
{
    switch (scheme) {
    case Scheme::uniform:
        return scheme_uniform(data.n_source()).values;
    case Scheme::ba3us: {
        const auto pred = predict_classes(p, data.target_inputs);
        std::vector<int> labels;
        for (const auto& s : data.source) labels.push_back(detail::class_id(s.y));
        return scheme_ba3us(pred, labels, data.n_target()).values;
    }
    case Scheme::arpm: {
        std::vector<Vector> fs, ft;
        for (const auto& s : data.source) fs.push_back(p.features(s.x));
        for (const auto& x : data.target_inputs) ft.push_back(p.features(x));
        return scheme_arpm(fs, ft, cfg.arpm).values;
    }
    case Scheme::warmpot:
        break;
    }
    throw Error("warmpot weights are read from the batch plan");
}

/// Runs total_iters alternating steps; deterministic given cfg.seed.
inline TrainResult train(const PdaDataset& data, const TrainConfig& cfg,
                         const std::function<void(const TraceRow&)>& on_step = {})
{
    cfg.validate();
    data.validate();
    const Eigen::Index d = data.dim();
    const Eigen::Index k = cfg.feature_dim > 0 ? cfg.feature_dim : d;
    const Eigen::Index K = class_count(data);
    for (const auto& s : data.source) (void)detail::class_id(s.y);

    TrainResult res;
    res.params = init_params(d, k, K, cfg.seed, cfg.init_scale);
    std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
    const auto outliers = outlier_classes(data);
    std::vector<double> scheme_weights;

    for (int it = 0; it < cfg.total_iters; ++it) {
        if (cfg.scheme != Scheme::warmpot && it % cfg.weight_update_interval == 0)
            scheme_weights = scheme_dataset_weights(cfg.scheme, res.params, data, cfg);

        const auto si = detail::draw_indices(data.n_source(), static_cast<std::size_t>(cfg.batch_size), rng);
        const auto ti = detail::draw_indices(data.n_target(), static_cast<std::size_t>(cfg.batch_size), rng);
        Batch b;
        std::vector<double> bw;
        for (std::size_t i : si) {
            b.xs.push_back(data.source[i].x);
            b.ys.push_back(detail::class_id(data.source[i].y));
            if (!scheme_weights.empty()) bw.push_back(scheme_weights[i]);
        }
        for (std::size_t j : ti) b.xt.push_back(data.target_inputs[j]);

        const double alpha = alpha_schedule(it, cfg);
        const StepResult step =
            cfg.scheme == Scheme::warmpot
                ? warmpot_step(res.params, b, alpha, cfg)
                : warmpot_step(res.params, b, alpha, cfg, std::span<const double>(bw));

        TraceRow row;
        row.iter = it;
        row.alpha = step.eval.alpha;
        row.objective = step.eval.parts.value();
        row.source_loss = step.eval.parts.source_loss;
        row.alignment = step.eval.parts.alignment;
        row.plan_mass = step.eval.ot.plan.total();
        row.converged = step.eval.ot.converged;
        row.solver_iters = step.eval.ot.iterations;
        if (data.has_hidden_labels()) {
            double out = 0.0, tot = 0.0;
            for (std::size_t i = 0; i < b.ys.size(); ++i) {
                tot += step.source_weights[i];
                if (outliers.contains(b.ys[i])) out += step.source_weights[i];
            }
            row.outlier_share = tot > 0.0 ? out / tot : 0.0;
        }
        res.nonconverged_steps += !row.converged;
        res.clamped_steps += step.eval.alpha_clamped;
        if (on_step) on_step(row);
        res.trace.push_back(row);
    }
    return res;
}

/// Full-dataset p from the exact plan under the final model at alpha_max.
inline WeightVector final_source_weights(const ModelParams& p, const PdaDataset& data, const TrainConfig& cfg)
{
    Batch b;
    for (const auto& s : data.source) b.xs.push_back(s.x), b.ys.push_back(detail::class_id(s.y));
    b.xt = data.target_inputs;
    const Matrix C = warmpot_cost(p, b, cfg);
    const auto a = uniform_masses(b.xs.size(), 1.0 / cfg.beta);
    const auto q = uniform_masses(b.xt.size(), 1.0);
    const auto ot = exact_partial_ot(a, q, C, feasible_alpha(cfg.alpha_max, cfg.beta));
    return marginal_weights(ot.plan).p;
}

inline std::string trace_csv(std::span<const TraceRow> trace)
{
    std::string out = "iter,alpha,objective,source_loss,alignment,plan_mass,converged,solver_iters,outlier_share\n";
    char buf[512];
    for (const auto& r : trace) {
        std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%d,%d,", r.iter, r.alpha, r.objective,
                      r.source_loss, r.alignment, r.plan_mass, r.converged ? 1 : 0, r.solver_iters);
        out += buf;
        if (!std::isnan(r.outlier_share)) {
            std::snprintf(buf, sizeof buf, "%.17g", r.outlier_share);
            out += buf;
        }
        out += '\n';
    }
    return out;
}

}  // namespace potpda
