#pragma once

// Synthetic partial-DA tasks (Gaussian blobs, target uses a subset of the
// classes) and the scheme comparison / sensitivity harness built on train().

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "measures.hpp"
#include "warmpot.hpp"
#include "weights.hpp"

namespace potpda {

struct TaskSpec {
    int K = 5;
    int shared = 3;
    int d = 2;
    int n_s = 250;
    int n_t = 150;
    double separation = 4.0;
    double noise = 1.0;
    double shift = 0.15;  // target offset along the first axis, in units of separation
    std::uint64_t seed = 0;

    bool operator==(const TaskSpec&) const = default;

    void validate() const
    {
        if (K < 1) throw Error("task: K must be >= 1");
        if (shared < 1 || shared > K) throw Error("task: shared must lie in [1, K]");
        if (d < 1) throw Error("task: d must be >= 1");
        if (!(separation > 0.0)) throw Error("task: separation must be positive");
        if (!(noise > 0.0)) throw Error("task: noise must be positive");
        if (!std::isfinite(shift)) throw Error("task: shift must be finite");
        if (n_s < K) throw Error("task: n_s must be >= K");
        if (n_t < shared) throw Error("task: n_t must be >= shared");
    }
};

/// Class c is centred at (c - (K-1)/2) * separation on the first axis; labels
/// cycle so every class is represented. Target samples come from classes < shared only.
inline PdaDataset generate_pda_task(const TaskSpec& spec)
{
    spec.validate();
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> normal(0.0, spec.noise);
    auto sample = [&](int c, double offset) {
        Vector x(spec.d);
        for (int t = 0; t < spec.d; ++t) x(t) = normal(rng);
        x(0) += (c - 0.5 * (spec.K - 1)) * spec.separation + offset;
        return x;
    };
    PdaDataset data;
    for (int i = 0; i < spec.n_s; ++i) {
        const int c = i % spec.K;
        data.source.push_back({sample(c, 0.0), static_cast<double>(c)});
    }
    for (int j = 0; j < spec.n_t; ++j) {
        const int c = j % spec.shared;
        data.target_inputs.push_back(sample(c, spec.shift * spec.separation));
        data.target_labels_hidden.push_back(static_cast<double>(c));
    }
    return data;
}

/// Share of the total weight on source samples with label >= shared.
inline double outlier_weight_share(const WeightVector& w, std::span<const double> source_labels, int shared)
{
    if (w.size() != source_labels.size()) throw Error("outlier share: weights and labels differ in length");
    double out = 0.0, total = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        total += w.values[i];
        if (source_labels[i] >= shared) out += w.values[i];
    }
    if (!(total > 0.0)) throw Error("outlier share: zero total weight");
    return out / total;
}

inline double outlier_sample_share(std::span<const double> source_labels, int shared)
{
    if (source_labels.empty()) throw Error("outlier share: no labels");
    std::size_t c = 0;
    for (double y : source_labels) c += y >= shared;
    return static_cast<double>(c) / static_cast<double>(source_labels.size());
}

struct SchemeResult {
    Scheme scheme = Scheme::warmpot;
    std::vector<std::uint64_t> seeds;
    std::vector<double> accuracies;     // NaN marks a failed cell
    std::vector<double> outlier_shares;  // of the final full-dataset weights
    std::vector<std::string> failures;
    std::vector<std::size_t> histogram;  // weights of the first successful seed, 20 bins
    double mean_accuracy = 0.0;
    double std_accuracy = 0.0;
};

struct BenchResult {
    std::vector<SchemeResult> rows;
    double outlier_sample_share = 0.0;
};

inline void summarize(std::span<const double> xs, double& mean, double& sd)
{
    std::vector<double> ok;
    for (double x : xs)
        if (!std::isnan(x)) ok.push_back(x);
    mean = sd = 0.0;
    if (ok.empty()) {
        mean = sd = std::nan("");
        return;
    }
    mean = std::accumulate(ok.begin(), ok.end(), 0.0) / static_cast<double>(ok.size());
    if (ok.size() > 1) {
        double s = 0.0;
        for (double x : ok) s += (x - mean) * (x - mean);
        sd = std::sqrt(s / static_cast<double>(ok.size() - 1));
    }
}

/// Weights in [0, 1] for the histogram: warmpot rows are p * beta * n_s,
/// other schemes are scaled by their maximum.
inline WeightVector final_scheme_weights(Scheme scheme, const ModelParams& p, const PdaDataset& data,
                                         const TrainConfig& cfg)
{
    if (scheme == Scheme::warmpot)
        return normalized_source_weights(final_source_weights(p, data, cfg), cfg.beta, data.n_source());
    WeightVector w;
    w.scheme = scheme;
    w.values = scheme_dataset_weights(scheme, p, data, cfg);
    double mx = 0.0;
    for (double v : w.values) mx = std::max(mx, v);
    if (mx > 0.0)
        for (double& v : w.values) v /= mx;
    w.normalizer = mx;
    return w;
}

/// One model per (scheme, seed). Seed s generates the task with spec.seed + s
/// and initialises/trains with s, so schemes are paired on data and init.
inline BenchResult compare_schemes(const TaskSpec& spec, const TrainConfig& cfg, std::span<const Scheme> schemes,
                                   std::span<const std::uint64_t> seeds)
{
    if (schemes.empty()) throw Error("bench: no schemes");
    if (seeds.empty()) throw Error("bench: no seeds");
    BenchResult res;
    for (Scheme s : schemes) {
        SchemeResult r;
        r.scheme = s;
        res.rows.push_back(r);
    }
    for (std::uint64_t seed : seeds) {
        TaskSpec ts = spec;
        ts.seed = spec.seed + seed;
        const PdaDataset data = generate_pda_task(ts);
        const auto labels = data.source_labels();
        res.outlier_sample_share = outlier_sample_share(labels, spec.shared);
        for (auto& row : res.rows) {
            TrainConfig c = cfg;
            c.scheme = row.scheme;
            c.seed = seed;
            row.seeds.push_back(seed);
            try {
                const TrainResult tr = train(data, c);
                row.accuracies.push_back(target_accuracy(tr.params, data));
                const WeightVector w = final_scheme_weights(row.scheme, tr.params, data, c);
                row.outlier_shares.push_back(outlier_weight_share(w, labels, spec.shared));
                if (row.histogram.empty()) row.histogram = weight_histogram(w.values);
            } catch (const Error& e) {
                row.accuracies.push_back(std::nan(""));
                row.outlier_shares.push_back(std::nan(""));
                row.failures.push_back("seed " + std::to_string(seed) + ": " + e.what());
            }
        }
    }
    for (auto& row : res.rows) summarize(row.accuracies, row.mean_accuracy, row.std_accuracy);
    return res;
}

enum class SweepParam { alpha_max, beta };

struct SweepRow {
    double value = 0.0;
    double mean_accuracy = 0.0;
    double std_accuracy = 0.0;
};

/// One warmpot train/evaluate per grid value and seed, all else fixed.
inline std::vector<SweepRow> sensitivity_sweep(const TaskSpec& spec, const TrainConfig& cfg, SweepParam param,
                                               std::span<const double> grid, std::span<const std::uint64_t> seeds)
{
    if (seeds.empty()) throw Error("sweep: no seeds");
    for (double v : grid)
        if (!(v > 0.0) || v > 1.0) throw Error("sweep: grid values must lie in (0, 1]");
    std::vector<SweepRow> rows;
    for (double v : grid) {
        TrainConfig c = cfg;
        c.scheme = Scheme::warmpot;
        (param == SweepParam::alpha_max ? c.alpha_max : c.beta) = v;
        const Scheme only[] = {Scheme::warmpot};
        const BenchResult r = compare_schemes(spec, c, only, seeds);
        rows.push_back({v, r.rows.front().mean_accuracy, r.rows.front().std_accuracy});
    }
    return rows;
}

}  // namespace potpda
