#pragma once

// Data model: labeled samples, discrete measures, cost matrices and the
// hypothesis decomposition w = g o f used throughout the library.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace potpda {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Raised for every contract violation (bad sizes, infeasible instances, ...).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct LabeledSample {
    Vector x;
    double y = 0.0;  // class id (integral) or a real label
};

struct PdaDataset {
    std::vector<LabeledSample> source;
    std::vector<Vector> target_inputs;
    // Only for evaluation; training never reads this.
    std::vector<double> target_labels_hidden;

    std::size_t n_source() const { return source.size(); }
    std::size_t n_target() const { return target_inputs.size(); }
    bool has_hidden_labels() const { return !target_labels_hidden.empty(); }
    Eigen::Index dim() const { return source.empty() ? 0 : source.front().x.size(); }

    std::vector<Vector> source_inputs() const
    {
        std::vector<Vector> xs;
        xs.reserve(source.size());
        for (const auto& s : source) xs.push_back(s.x);
        return xs;
    }

    std::vector<double> source_labels() const
    {
        std::vector<double> ys;
        ys.reserve(source.size());
        for (const auto& s : source) ys.push_back(s.y);
        return ys;
    }

    void validate() const
    {
        if (source.empty()) throw Error("dataset: no source samples");
        if (target_inputs.empty()) throw Error("dataset: no target samples");
        const auto d = dim();
        if (d < 1) throw Error("dataset: input dimension must be >= 1");
        for (const auto& s : source) {
            if (s.x.size() != d) throw Error("dataset: inconsistent source dimension");
            if (!std::isfinite(s.y)) throw Error("dataset: non-finite source label");
        }
        for (const auto& x : target_inputs)
            if (x.size() != d) throw Error("dataset: inconsistent target dimension");
        if (has_hidden_labels()) {
            if (target_labels_hidden.size() != target_inputs.size())
                throw Error("dataset: hidden label count does not match target count");
            const auto labels = source_labels();
            const std::set<double> src(labels.begin(), labels.end());
            for (double y : target_labels_hidden)
                if (!src.contains(y))
                    throw Error("dataset: hidden target label absent from source label set");
        }
    }
};

struct DiscreteMeasure {
    std::vector<double> masses;
    std::vector<std::size_t> support_ids;

    double total_mass() const
    {
        double t = 0.0;
        for (double m : masses) t += m;
        return t;
    }
};

enum class CostKind { feature_only, joint };

struct CostMatrix {
    Matrix entries;
    CostKind kind = CostKind::feature_only;
};

enum class LossKind { clipped_abs, zero_one, cross_entropy };

struct LossSpec {
    LossKind kind = LossKind::clipped_abs;
    double zeta = 1.0;  // Lipschitz constant in each argument, metric regimes only

    static LossSpec clipped_abs() { return {LossKind::clipped_abs, 1.0}; }
    static LossSpec zero_one() { return {LossKind::zero_one, 0.0}; }
    static LossSpec cross_entropy() { return {LossKind::cross_entropy, 0.0}; }

    bool is_metric() const { return kind != LossKind::cross_entropy; }

    /// Metric-regime loss between two labels, in [0, 1].
    double operator()(double a, double b) const
    {
        switch (kind) {
        case LossKind::clipped_abs:
            return std::min(std::abs(a - b), 1.0);
        case LossKind::zero_one:
            return a == b ? 0.0 : 1.0;
        case LossKind::cross_entropy:
            break;
        }
        throw Error("cross-entropy loss is not a label metric");
    }
};

/// Linear feature map t = W x.
struct LinearFeatureMap {
    Matrix weights;  // k x d

    static LinearFeatureMap identity(Eigen::Index d) { return {Matrix::Identity(d, d)}; }

    Vector operator()(const Vector& x) const
    {
        if (x.size() != weights.cols()) throw Error("feature map: input dimension mismatch");
        return weights * x;
    }

    std::vector<Vector> apply(std::span<const Vector> xs) const
    {
        std::vector<Vector> out;
        out.reserve(xs.size());
        for (const auto& x : xs) out.push_back((*this)(x));
        return out;
    }

    Eigen::Index out_dim() const { return weights.rows(); }
};

/// Scalar head t -> clamp(<v, t> + b, lo, hi). Clamping is 1-Lipschitz, so the
/// head is ||v||-Lipschitz for |.| and therefore for the clipped-abs loss.
struct LipschitzHead {
    Vector v;
    double bias = 0.0;
    double lo = 0.0;
    double hi = 1.0;
    double gamma = 1.0;

    double operator()(const Vector& t) const
    {
        if (t.size() != v.size()) throw Error("head: feature dimension mismatch");
        return std::clamp(v.dot(t) + bias, lo, hi);
    }

    bool certified() const { return v.allFinite() && v.norm() <= gamma * (1.0 + 1e-12); }
};

/// Linear K-class softmax head used in the cross-entropy regime.
struct SoftmaxHead {
    Matrix weights;  // K x k
    Vector bias;     // K

    Vector logits(const Vector& t) const { return weights * t + bias; }

    Vector probabilities(const Vector& t) const
    {
        Vector z = logits(t);
        z.array() -= z.maxCoeff();
        z = z.array().exp();
        return z / z.sum();
    }
};

struct Hypothesis {
    LinearFeatureMap f;
    std::variant<LipschitzHead, SoftmaxHead> g;

    const LipschitzHead& metric_head() const
    {
        if (const auto* h = std::get_if<LipschitzHead>(&g)) return *h;
        throw Error("hypothesis has no Lipschitz scalar head");
    }

    /// Prediction in the metric-loss regime.
    double predict(const Vector& x) const { return metric_head()(f(x)); }
};

struct FeatureMeasure {
    DiscreteMeasure measure;
    std::vector<Vector> features;
};

/// Uniform measure of total mass `scale` over the images f(x) of the samples.
inline FeatureMeasure empirical_feature_measure(std::span<const Vector> samples,
                                                const LinearFeatureMap& f, double scale)
{
    if (samples.empty()) throw Error("empty measure");
    if (!(scale > 0.0) || !std::isfinite(scale)) throw Error("measure scale must be positive");
    FeatureMeasure out;
    const double m = scale / static_cast<double>(samples.size());
    out.measure.masses.assign(samples.size(), m);
    out.measure.support_ids.resize(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        out.measure.support_ids[i] = i;
        out.features.push_back(f(samples[i]));
    }
    return out;
}

inline std::vector<double> uniform_masses(std::size_t n, double total)
{
    return std::vector<double>(n, total / static_cast<double>(n));
}

/// C_ij = gamma * ||s_i - t_j||.
inline CostMatrix feature_cost_matrix(std::span<const Vector> source_feats,
                                      std::span<const Vector> target_feats, double gamma)
{
    if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw Error("cost scale must be nonnegative");
    CostMatrix c;
    c.kind = CostKind::feature_only;
    c.entries.resize(static_cast<Eigen::Index>(source_feats.size()),
                     static_cast<Eigen::Index>(target_feats.size()));
    for (std::size_t i = 0; i < source_feats.size(); ++i) {
        for (std::size_t j = 0; j < target_feats.size(); ++j) {
            if (source_feats[i].size() != target_feats[j].size())
                throw Error("feature dimension mismatch in cost matrix");
            c.entries(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                gamma * (source_feats[i] - target_feats[j]).norm();
        }
    }
    return c;
}

/// C_ij = zeta_gamma * ||s_i - t_j|| + loss(y_i, yhat_j).
inline CostMatrix joint_cost_matrix(std::span<const Vector> source_feats,
                                    std::span<const double> source_labels,
                                    std::span<const Vector> target_feats,
                                    std::span<const double> predicted_labels, double zeta_gamma,
                                    const LossSpec& loss)
{
    if (!loss.is_metric()) throw Error("joint cost requires metric loss");
    if (source_labels.size() != source_feats.size())
        throw Error("joint cost: source label count mismatch");
    if (predicted_labels.size() != target_feats.size())
        throw Error("joint cost: predicted label count mismatch");
    CostMatrix c = feature_cost_matrix(source_feats, target_feats, zeta_gamma);
    c.kind = CostKind::joint;
    for (Eigen::Index i = 0; i < c.entries.rows(); ++i)
        for (Eigen::Index j = 0; j < c.entries.cols(); ++j)
            c.entries(i, j) += loss(source_labels[static_cast<std::size_t>(i)],
                                    predicted_labels[static_cast<std::size_t>(j)]);
    return c;
}

}  // namespace potpda
