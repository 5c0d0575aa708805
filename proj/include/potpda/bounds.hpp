#pragma once

// Right-hand sides of the feature-based and joint-distribution target-loss
// bounds, the pairwise Lipschitz lemma and the PAC-Bayes wrapper. Classifier
// sets are finite so every min / max below is exact.
//
// L_f and L^_f need target labels: they are evaluated from hidden labels and
// are only meaningful for verification ("oracle-only").

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <vector>

#include "measures.hpp"
#include "pot.hpp"
#include "weights.hpp"

namespace potpda {

struct FiniteClassifierSet {
    std::vector<LipschitzHead> candidates;

    bool empty() const { return candidates.empty(); }
    std::size_t size() const { return candidates.size(); }

    /// Every candidate is gamma-Lipschitz (||v|| <= gamma).
    bool certified(double gamma) const
    {
        return std::all_of(candidates.begin(), candidates.end(), [gamma](const LipschitzHead& h) {
            return h.v.allFinite() && h.v.norm() <= gamma * (1.0 + 1e-12);
        });
    }

    /// Grid over (v, b): v = s * gamma * dir for each unit direction and
    /// fraction s in (0, 1], plus v = 0; every bias in `biases`.
    static FiniteClassifierSet grid(std::span<const Vector> directions, std::span<const double> norm_fractions,
                                    std::span<const double> biases, double gamma, double lo, double hi)
    {
        if (directions.empty()) throw Error("classifier grid: no directions");
        const auto k = directions.front().size();
        std::vector<Vector> vs{Vector::Zero(k)};
        for (const auto& d : directions) {
            if (d.size() != k || !(d.norm() > 0.0)) throw Error("classifier grid: bad direction");
            for (double s : norm_fractions) {
                if (!(s > 0.0) || s > 1.0) throw Error("classifier grid: norm fraction outside (0, 1]");
                vs.push_back(d.normalized() * (s * gamma));
            }
        }
        FiniteClassifierSet set;
        for (const auto& v : vs)
            for (double b : biases) set.candidates.push_back({v, b, lo, hi, gamma});
        return set;
    }
};

struct BoundReport {
    int theorem = 1;
    double weighted_source_loss = 0.0;
    double pw_term = 0.0;
    double tv_term = 0.0;
    double lf_term = 0.0;
    double rhs_total = 0.0;
    double lhs_empirical_target_loss = 0.0;
    double pw_value = 0.0;  // PW_alpha itself, before the 2/alpha or 1/alpha factor
    double xi = 0.0;        // joint bound only
    double alpha = 0.0, beta = 0.0, gamma = 0.0, zeta = 0.0;
    bool oracle_only = true;
    WeightVector p, q;

    double slack() const { return rhs_total - lhs_empirical_target_loss; }
};

namespace detail {

inline void require_hidden_labels(const PdaDataset& data)
{
    if (!data.has_hidden_labels()) throw Error("bound evaluation needs hidden target labels");
    data.validate();
}

inline void require_certificate(const Hypothesis& w, double gamma, const FiniteClassifierSet& G,
                                const LossSpec& loss)
{
    if (G.empty()) throw Error("empty classifier set");
    // The scalar heads are Lipschitz for |.|; only the clipped-abs loss inherits it.
    if (loss.kind != LossKind::clipped_abs) throw Error("Lipschitz certificate missing");
    const auto* head = std::get_if<LipschitzHead>(&w.g);
    if (head == nullptr || !(head->v.allFinite() && head->v.norm() <= gamma * (1.0 + 1e-12)))
        throw Error("Lipschitz certificate missing");
    if (!G.certified(gamma)) throw Error("Lipschitz certificate missing");
}

inline void check_alpha_beta(double alpha, double beta)
{
    if (!(alpha > 0.0) || alpha > 1.0) throw Error("alpha must lie in (0, 1]");
    if (!(beta > 0.0) || beta > 1.0) throw Error("beta must lie in (0, 1]");
}

inline double empirical_target_loss(const Hypothesis& w, const PdaDataset& data, const LossSpec& loss)
{
    double s = 0.0;
    for (std::size_t j = 0; j < data.n_target(); ++j)
        s += loss(w.predict(data.target_inputs[j]), data.target_labels_hidden[j]);
    return s / static_cast<double>(data.n_target());
}

}  // namespace detail

/// min over g in G of the worst loss of g o f on all labeled source and target samples.
inline double l_f(const LinearFeatureMap& f, const FiniteClassifierSet& G, const PdaDataset& data,
                  const LossSpec& loss)
{
    if (G.empty()) throw Error("empty classifier set");
    if (!loss.is_metric()) throw Error("l_f requires a metric loss");
    detail::require_hidden_labels(data);
    std::vector<Vector> feats;
    std::vector<double> labels;
    for (const auto& s : data.source) feats.push_back(f(s.x)), labels.push_back(s.y);
    for (std::size_t j = 0; j < data.n_target(); ++j)
        feats.push_back(f(data.target_inputs[j])), labels.push_back(data.target_labels_hidden[j]);

    double best = std::numeric_limits<double>::infinity();
    for (const auto& g : G.candidates) {
        double worst = 0.0;
        for (std::size_t i = 0; i < feats.size() && worst < best; ++i)
            worst = std::max(worst, loss(g(feats[i]), labels[i]));
        best = std::min(best, worst);
    }
    return best;
}

/// Feature-based bound: sum (p_i/alpha) l(w(x_i), y_i) + (2/alpha) PW + TV + 2 L_f.
inline BoundReport theorem1_rhs(const Hypothesis& w, const PdaDataset& data, double alpha, double beta,
                                double gamma, const FiniteClassifierSet& G, const LossSpec& loss,
                                OtMethod method = OtMethod::exact, const SolverConfig& cfg = {})
{
    detail::check_alpha_beta(alpha, beta);
    detail::require_hidden_labels(data);
    detail::require_certificate(w, gamma, G, loss);

    const auto src = w.f.apply(data.source_inputs());
    const auto tgt = w.f.apply(data.target_inputs);
    const Matrix C = feature_cost_matrix(src, tgt, gamma).entries;
    const auto a = uniform_masses(data.n_source(), 1.0 / beta);
    const auto b = uniform_masses(data.n_target(), 1.0);
    const auto ot = solve_partial_ot(a, b, C, alpha, method, cfg);
    const auto mw = marginal_weights(ot.plan);

    BoundReport r;
    r.theorem = 1;
    r.alpha = alpha, r.beta = beta, r.gamma = gamma, r.zeta = loss.zeta;
    for (std::size_t i = 0; i < data.n_source(); ++i)
        r.weighted_source_loss += mw.p.values[i] / alpha * loss(w.predict(data.source[i].x), data.source[i].y);
    r.pw_value = ot.cost;
    r.pw_term = 2.0 / alpha * ot.cost;
    r.tv_term = tv_term(mw.q, alpha, data.n_target());
    r.lf_term = 2.0 * l_f(w.f, G, data, loss);
    r.rhs_total = r.weighted_source_loss + r.pw_term + r.tv_term + r.lf_term;
    r.lhs_empirical_target_loss = detail::empirical_target_loss(w, data, loss);
    r.p = mw.p;
    r.q = mw.q;
    return r;
}

struct XiTerms {
    double joint_min = 0.0;   // min_g (source part + target part)
    double source_min = 0.0;  // min_g source part
    double target_min = 0.0;  // min_g target part
    double value = 0.0;       // joint_min - source_min - target_min >= 0
};

/// Xi and its three minima for weights (p_hat, q_hat) of the joint-cost plan.
inline XiTerms xi_terms(const LinearFeatureMap& f, const FiniteClassifierSet& G, const WeightVector& p_hat,
                        const WeightVector& q_hat, double alpha, const PdaDataset& data, const LossSpec& loss)
{
    if (G.empty()) throw Error("empty classifier set");
    detail::require_hidden_labels(data);
    if (p_hat.size() != data.n_source() || q_hat.size() != data.n_target())
        throw Error("xi: weight lengths do not match the data");
    const auto src = f.apply(data.source_inputs());
    const auto tgt = f.apply(data.target_inputs);
    XiTerms t;
    t.joint_min = t.source_min = t.target_min = std::numeric_limits<double>::infinity();
    for (const auto& g : G.candidates) {
        double s = 0.0, u = 0.0;
        for (std::size_t i = 0; i < src.size(); ++i)
            s += p_hat.values[i] / alpha * loss(g(src[i]), data.source[i].y);
        for (std::size_t j = 0; j < tgt.size(); ++j)
            u += q_hat.values[j] / alpha * loss(g(tgt[j]), data.target_labels_hidden[j]);
        t.joint_min = std::min(t.joint_min, s + u);
        t.source_min = std::min(t.source_min, s);
        t.target_min = std::min(t.target_min, u);
    }
    t.value = t.joint_min - t.source_min - t.target_min;
    return t;
}

inline double xi_term(const LinearFeatureMap& f, const FiniteClassifierSet& G, const WeightVector& p_hat,
                      const WeightVector& q_hat, double alpha, const PdaDataset& data, const LossSpec& loss)
{
    return xi_terms(f, G, p_hat, q_hat, alpha, data, loss).value;
}

/// Joint-distribution bound: sum (p^_i/alpha) l(w(x_i), y_i) + (1/alpha) PW + TV + L^_f,
/// PW over the cost zeta*gamma*||f(x) - f(x~)|| + l(y, w(x~)).
inline BoundReport theorem2_rhs(const Hypothesis& w, const PdaDataset& data, double alpha, double beta,
                                double gamma, const FiniteClassifierSet& G, const LossSpec& loss,
                                OtMethod method = OtMethod::exact, const SolverConfig& cfg = {})
{
    detail::check_alpha_beta(alpha, beta);
    detail::require_hidden_labels(data);
    detail::require_certificate(w, gamma, G, loss);

    const auto src = w.f.apply(data.source_inputs());
    const auto tgt = w.f.apply(data.target_inputs);
    std::vector<double> predicted;
    predicted.reserve(data.n_target());
    for (const auto& x : data.target_inputs) predicted.push_back(w.predict(x));
    const auto src_labels = data.source_labels();
    const Matrix C = joint_cost_matrix(src, src_labels, tgt, predicted, loss.zeta * gamma, loss).entries;
    const auto a = uniform_masses(data.n_source(), 1.0 / beta);
    const auto b = uniform_masses(data.n_target(), 1.0);
    const auto ot = solve_partial_ot(a, b, C, alpha, method, cfg);
    const auto mw = marginal_weights(ot.plan);
    const XiTerms xi = xi_terms(w.f, G, mw.p, mw.q, alpha, data, loss);

    BoundReport r;
    r.theorem = 2;
    r.alpha = alpha, r.beta = beta, r.gamma = gamma, r.zeta = loss.zeta;
    for (std::size_t i = 0; i < data.n_source(); ++i)
        r.weighted_source_loss += mw.p.values[i] / alpha * loss(w.predict(data.source[i].x), data.source[i].y);
    r.pw_value = ot.cost;
    r.pw_term = ot.cost / alpha;
    r.tv_term = tv_term(mw.q, alpha, data.n_target());
    r.xi = xi.value;
    r.lf_term = xi.target_min + xi.value;
    r.rhs_total = r.weighted_source_loss + r.pw_term + r.tv_term + r.lf_term;
    r.lhs_empirical_target_loss = detail::empirical_target_loss(w, data, loss);
    r.p = mw.p;
    r.q = mw.q;
    return r;
}

/// max over pairs in z u z~ of |l(w(x),y) - l(w(x'),y')| - 2 gamma ||f(x) - f(x')|| - 2 L_f.
/// Nonpositive whenever w and every candidate in G are gamma-Lipschitz.
inline double lemma_a5_check(const Hypothesis& w, double gamma, const FiniteClassifierSet& G,
                             const PdaDataset& data, const LossSpec& loss)
{
    const double lf = l_f(w.f, G, data, loss);
    std::vector<Vector> feats;
    std::vector<double> losses;
    for (const auto& s : data.source) {
        feats.push_back(w.f(s.x));
        losses.push_back(loss(w.metric_head()(feats.back()), s.y));
    }
    for (std::size_t j = 0; j < data.n_target(); ++j) {
        feats.push_back(w.f(data.target_inputs[j]));
        losses.push_back(loss(w.metric_head()(feats.back()), data.target_labels_hidden[j]));
    }
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < feats.size(); ++i)
        for (std::size_t k = 0; k < feats.size(); ++k)
            worst = std::max(worst, std::abs(losses[i] - losses[k]) - 2.0 * gamma * (feats[i] - feats[k]).norm() -
                                        2.0 * lf);
    return worst;
}

// ---------------------------------------------------------------------------
// PAC-Bayes wrapper.

struct PacBayesConfig {
    double lambda = 1.0;
    double delta = 0.1;
    std::size_t n_t = 1;
    double kl = 0.0;

    void validate() const
    {
        if (!(lambda > 0.0)) throw Error("pac-bayes: lambda must be positive");
        if (!(delta > 0.0 && delta < 1.0)) throw Error("pac-bayes: delta must lie in (0, 1)");
        if (n_t == 0) throw Error("pac-bayes: n_t must be positive");
        if (!(kl >= 0.0)) throw Error("pac-bayes: kl must be nonnegative");
    }
};

/// B = lambda / (8 n_t) + (KL + ln(1/delta)) / lambda.
inline double pac_bayes_penalty(const PacBayesConfig& cfg)
{
    cfg.validate();
    return cfg.lambda / (8.0 * static_cast<double>(cfg.n_t)) + (cfg.kl + std::log(1.0 / cfg.delta)) / cfg.lambda;
}

inline double pac_bayes_rhs(double mean_R, const PacBayesConfig& cfg) { return mean_R + pac_bayes_penalty(cfg); }

/// Minimiser of the penalty in lambda: sqrt(8 n_t (KL + ln(1/delta))).
inline double optimal_lambda(std::size_t n_t, double kl, double delta)
{
    return std::sqrt(8.0 * static_cast<double>(n_t) * (kl + std::log(1.0 / delta)));
}

inline double categorical_kl(std::span<const double> posterior, std::span<const double> prior)
{
    if (posterior.size() != prior.size()) throw Error("kl: length mismatch");
    double kl = 0.0;
    for (std::size_t i = 0; i < posterior.size(); ++i) {
        if (posterior[i] <= 0.0) continue;
        if (prior[i] <= 0.0) return std::numeric_limits<double>::infinity();
        kl += posterior[i] * std::log(posterior[i] / prior[i]);
    }
    return std::max(0.0, kl);
}

// ---------------------------------------------------------------------------
// Randomised validity harness.

struct BoundInstance {
    Hypothesis w;
    PdaDataset data;
    double alpha = 1.0;
    double beta = 1.0;
    double gamma = 1.0;
    FiniteClassifierSet G;
};

/// Small PDA instance with real labels in {0, 1, 2} (target uses a subset),
/// a random linear feature map, a certified random head and a <= 25 candidate grid.
inline BoundInstance random_bound_instance(std::mt19937_64& rng, int max_n = 30)
{
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    auto uniform_int = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
    auto open_unit = [&] { return 1.0 - unit(rng); };  // (0, 1]

    BoundInstance inst;
    const int d = uniform_int(1, 3);
    const int k = uniform_int(1, d);
    const int n_s = uniform_int(2, max_n);
    const int n_t = uniform_int(2, max_n);
    const int n_shared = uniform_int(1, 3);

    std::vector<Vector> centers(3);
    for (auto& c : centers) {
        c.resize(d);
        for (int t = 0; t < d; ++t) c(t) = 2.0 * normal(rng);
    }
    Vector shift(d);
    for (int t = 0; t < d; ++t) shift(t) = 0.5 * normal(rng);

    for (int i = 0; i < n_s; ++i) {
        const int y = uniform_int(0, 2);
        Vector x = centers[static_cast<std::size_t>(y)];
        for (int t = 0; t < d; ++t) x(t) += normal(rng);
        inst.data.source.push_back({x, static_cast<double>(y)});
    }
    // Hidden labels must be source labels; guarantee class 0 exists in the source.
    inst.data.source.front().y = 0.0;
    for (int j = 0; j < n_t; ++j) {
        int y = uniform_int(0, n_shared - 1);
        bool present = false;
        for (const auto& s : inst.data.source) present = present || s.y == y;
        if (!present) y = 0;
        Vector x = centers[static_cast<std::size_t>(y)] + shift;
        for (int t = 0; t < d; ++t) x(t) += normal(rng);
        inst.data.target_inputs.push_back(x);
        inst.data.target_labels_hidden.push_back(static_cast<double>(y));
    }

    Matrix Wf(k, d);
    for (int r = 0; r < k; ++r)
        for (int c = 0; c < d; ++c) Wf(r, c) = normal(rng) / std::sqrt(static_cast<double>(d));
    inst.w.f = LinearFeatureMap{Wf};

    inst.gamma = 0.05 + 2.0 * unit(rng);
    Vector v(k);
    for (int t = 0; t < k; ++t) v(t) = normal(rng);
    if (v.norm() == 0.0) v(0) = 1.0;
    v *= inst.gamma * open_unit() / v.norm();
    inst.w.g = LipschitzHead{v, 2.0 * unit(rng), 0.0, 2.0, inst.gamma};

    std::vector<Vector> dirs;
    if (k == 1) {
        dirs = {Vector::Constant(1, 1.0), Vector::Constant(1, -1.0)};
    } else {
        for (int t = 0; t < 2; ++t) {
            Vector dv(k);
            for (int c = 0; c < k; ++c) dv(c) = normal(rng);
            dirs.push_back(dv);
        }
    }
    const std::vector<double> fractions{0.5, 1.0};
    const std::vector<double> biases{0.0, 0.5, 1.0, 1.5, 2.0};
    inst.G = FiniteClassifierSet::grid(dirs, fractions, biases, inst.gamma, 0.0, 2.0);

    inst.alpha = open_unit();
    inst.beta = open_unit();
    return inst;
}

struct BoundCheckSummary {
    int theorem = 1;
    int trials = 0;
    int violations = 0;
    double max_slack = -std::numeric_limits<double>::infinity();
    double min_slack = std::numeric_limits<double>::infinity();
    std::vector<BoundReport> reports;
};

/// Evaluates the chosen bound on `trials` random instances; a violation is
/// RHS < LHS - tol.
inline BoundCheckSummary run_bound_check(int theorem, int trials, std::uint64_t seed, double tol = 1e-9)
{
    if (theorem != 1 && theorem != 2) throw Error("bound check: theorem must be 1 or 2");
    if (trials < 1) throw Error("bound check: trials must be >= 1");
    std::mt19937_64 rng(seed);
    const LossSpec loss = LossSpec::clipped_abs();
    BoundCheckSummary s;
    s.theorem = theorem;
    s.trials = trials;
    for (int t = 0; t < trials; ++t) {
        const BoundInstance inst = random_bound_instance(rng);
        BoundReport r = theorem == 1
                            ? theorem1_rhs(inst.w, inst.data, inst.alpha, inst.beta, inst.gamma, inst.G, loss)
                            : theorem2_rhs(inst.w, inst.data, inst.alpha, inst.beta, inst.gamma, inst.G, loss);
        const double slack = r.slack();
        if (slack < -tol) ++s.violations;
        s.max_slack = std::max(s.max_slack, slack);
        s.min_slack = std::min(s.min_slack, slack);
        s.reports.push_back(std::move(r));
    }
    return s;
}

// ---------------------------------------------------------------------------
// Monte-Carlo check of the PAC-Bayes wrapper over a finite hypothesis set.

enum class RiskBound { theorem1, empirical_target };

struct PacBayesSimulation {
    int trials = 0;
    int violations = 0;
    double delta = 0.1;
    double lambda = 0.0;
    double mean_gap = 0.0;  // average (bound - expected population loss)
    double violation_rate() const { return trials ? static_cast<double>(violations) / trials : 0.0; }
};

/// Source and target populations are fixed finite pools (so population losses
/// are exact); each trial draws n_s / n_t samples iid, forms a Gibbs posterior
/// on the source loss over a grid of certified heads, and tests
/// E_P[L_Q] <= E_P[R] + lambda/(8 n_t) + (KL + ln 1/delta)/lambda.
inline PacBayesSimulation simulate_pac_bayes(int trials, double delta, std::uint64_t seed, RiskBound risk,
                                             std::size_t n_s = 20, std::size_t n_t = 20)
{
    if (trials < 1) throw Error("pac-bayes simulation: trials must be >= 1");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const LossSpec loss = LossSpec::clipped_abs();
    const double gamma = 1.0;

    // Populations: 1-d inputs, labels in {0, 1, 2}; the target holds classes 0, 1 only and is shifted.
    auto pool = [&](std::size_t count, int classes, double shift) {
        std::vector<LabeledSample> out;
        for (std::size_t i = 0; i < count; ++i) {
            const int y = static_cast<int>(i % static_cast<std::size_t>(classes));
            Vector x(1);
            x(0) = 1.0 * y + shift + 0.6 * normal(rng);
            out.push_back({x, static_cast<double>(y)});
        }
        return out;
    };
    const auto source_pool = pool(600, 3, 0.0);
    const auto target_pool = pool(400, 2, 0.3);

    const std::vector<Vector> dirs{Vector::Constant(1, 1.0), Vector::Constant(1, -1.0)};
    const std::vector<double> fractions{0.5, 1.0};
    const std::vector<double> biases{-0.5, 0.0, 0.5, 1.0, 1.5};
    const FiniteClassifierSet H = FiniteClassifierSet::grid(dirs, fractions, biases, gamma, 0.0, 2.0);
    const std::size_t nh = H.size();
    const std::vector<double> prior(nh, 1.0 / static_cast<double>(nh));
    const LinearFeatureMap f = LinearFeatureMap::identity(1);

    std::vector<double> population(nh, 0.0);
    for (std::size_t h = 0; h < nh; ++h) {
        for (const auto& z : target_pool) population[h] += loss(H.candidates[h](z.x), z.y);
        population[h] /= static_cast<double>(target_pool.size());
    }

    PacBayesSimulation sim;
    sim.trials = trials;
    sim.delta = delta;
    // lambda is fixed before the data are seen.
    sim.lambda = optimal_lambda(n_t, 0.0, delta);
    std::uniform_int_distribution<std::size_t> pick_s(0, source_pool.size() - 1), pick_t(0, target_pool.size() - 1);

    for (int t = 0; t < trials; ++t) {
        PdaDataset data;
        for (std::size_t i = 0; i < n_s; ++i) data.source.push_back(source_pool[pick_s(rng)]);
        for (std::size_t j = 0; j < n_t; ++j) {
            const auto& z = target_pool[pick_t(rng)];
            data.target_inputs.push_back(z.x);
            data.target_labels_hidden.push_back(z.y);
        }
        // Hidden labels must appear among the source labels.
        bool ok = true;
        for (double y : data.target_labels_hidden) {
            bool present = false;
            for (const auto& s : data.source) present = present || s.y == y;
            ok = ok && present;
        }
        if (!ok) data.source.front().y = data.target_labels_hidden.front() == 0.0 ? 1.0 : 0.0;
        for (double y : data.target_labels_hidden) {
            bool present = false;
            for (const auto& s : data.source) present = present || s.y == y;
            if (!present) data.source.push_back({data.target_inputs.front(), y});
        }

        // Gibbs posterior on the source empirical loss (uses no target labels).
        std::vector<double> post(nh);
        double zsum = 0.0;
        for (std::size_t h = 0; h < nh; ++h) {
            double src_loss = 0.0;
            for (const auto& s : data.source) src_loss += loss(H.candidates[h](s.x), s.y);
            src_loss /= static_cast<double>(data.n_source());
            post[h] = std::exp(-10.0 * src_loss);
            zsum += post[h];
        }
        for (double& p : post) p /= zsum;

        double mean_r = 0.0, mean_pop = 0.0;
        for (std::size_t h = 0; h < nh; ++h) {
            if (post[h] < 1e-14) continue;
            const Hypothesis w{f, H.candidates[h]};
            const double r = risk == RiskBound::theorem1
                                 ? theorem1_rhs(w, data, 1.0, 0.5, gamma, H, loss).rhs_total
                                 : detail::empirical_target_loss(w, data, loss);
            mean_r += post[h] * r;
            mean_pop += post[h] * population[h];
        }
        const PacBayesConfig cfg{sim.lambda, delta, n_t, categorical_kl(post, prior)};
        const double bound = pac_bayes_rhs(mean_r, cfg);
        if (mean_pop > bound) ++sim.violations;
        sim.mean_gap += (bound - mean_pop) / trials;
    }
    return sim;
}

}  // namespace potpda
