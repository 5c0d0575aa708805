#pragma once

// Flat `key = value` run configuration with presets, range checks at parse
// time and a lossless echo.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "measures.hpp"
#include "synthbench.hpp"
#include "warmpot.hpp"
#include "weights.hpp"

namespace potpda {

/// Bad key or value; `key` names the offending entry.
class ConfigError : public Error {
public:
    ConfigError(std::string key, const std::string& msg) : Error(key + ": " + msg), key_(std::move(key)) {}
    const std::string& key() const { return key_; }

private:
    std::string key_;
};

struct RunConfig {
    std::string preset = "default";
    TrainConfig train;
    TaskSpec task;
    int seeds = 10;
    std::vector<Scheme> schemes{Scheme::warmpot, Scheme::uniform};

    bool operator==(const RunConfig& o) const
    {
        return preset == o.preset && train == o.train && task == o.task && seeds == o.seeds && schemes == o.schemes;
    }
};

inline const std::vector<std::string>& preset_names()
{
    static const std::vector<std::string> names{"default", "imagenet-caltech-like", "synthetic"};
    return names;
}

/// Resets `c` to the named preset.
inline void apply_preset(RunConfig& c, const std::string& name)
{
    c = RunConfig{};
    c.preset = name;
    if (name == "default") return;
    if (name == "imagenet-caltech-like") {
        c.train.alpha_max = 0.08;
        c.train.eta1 = 0.92;
        c.train.eta2 = 5.47;
        c.train.beta = 0.72;
        c.train.epsilon = 5.59;
        return;
    }
    if (name == "synthetic") {
        // Desk-scale task: raw 2-d inputs, so the cost scale is far below the
        // deep-feature one and the step budget is small.
        c.train.total_iters = 2000;
        c.train.ramp_iters = 1000;
        c.train.lr = 0.1;
        c.train.eta1 = 0.125;
        c.train.eta2 = 0.1;
        c.train.epsilon = 0.2;
        c.train.solver_max_iter = 1000;
        c.train.solver_tol = 1e-6;
        c.train.weight_update_interval = 200;
        c.train.arpm.subgradient_steps = 50;
        return;
    }
    throw ConfigError("preset", "unknown preset '" + name + "'");
}

namespace detail {

inline std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::string fmt_real(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline double parse_real(const std::string& key, const std::string& s)
{
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &pos);
    } catch (const std::exception&) {
        throw ConfigError(key, "not a number: '" + s + "'");
    }
    if (pos != s.size() || !std::isfinite(v)) throw ConfigError(key, "not a finite number: '" + s + "'");
    return v;
}

inline long long parse_int(const std::string& key, const std::string& s)
{
    std::size_t pos = 0;
    long long v = 0;
    try {
        v = std::stoll(s, &pos);
    } catch (const std::exception&) {
        throw ConfigError(key, "not an integer: '" + s + "'");
    }
    if (pos != s.size()) throw ConfigError(key, "not an integer: '" + s + "'");
    return v;
}

struct KeySpec {
    std::string name;
    std::function<void(RunConfig&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

enum class Bound { closed, open };

template <class Field>
KeySpec real_key(std::string name, Field field, double lo, Bound lo_kind, double hi, Bound hi_kind)
{
    return {name,
            [=](RunConfig& c, const std::string& s) {
                const double v = parse_real(name, s);
                const bool lo_ok = lo_kind == Bound::open ? v > lo : v >= lo;
                const bool hi_ok = hi_kind == Bound::open ? v < hi : v <= hi;
                if (!lo_ok || !hi_ok) {
                    throw ConfigError(name, "value " + s + " outside " + (lo_kind == Bound::open ? "(" : "[") +
                                                fmt_real(lo) + ", " + fmt_real(hi) +
                                                (hi_kind == Bound::open ? ")" : "]"));
                }
                field(c) = v;
            },
            [=](const RunConfig& c) { return fmt_real(field(const_cast<RunConfig&>(c))); }};
}

template <class Field>
KeySpec int_key(std::string name, Field field, long long lo, long long hi)
{
    return {name,
            [=](RunConfig& c, const std::string& s) {
                const long long v = parse_int(name, s);
                if (v < lo || v > hi)
                    throw ConfigError(name, "value " + s + " outside [" + std::to_string(lo) + ", " +
                                                std::to_string(hi) + "]");
                field(c) = static_cast<std::remove_reference_t<decltype(field(c))>>(v);
            },
            [=](const RunConfig& c) { return std::to_string(field(const_cast<RunConfig&>(c))); }};
}

inline const std::vector<KeySpec>& key_table()
{
    constexpr double inf = std::numeric_limits<double>::infinity();
    constexpr long long imax = 1'000'000'000;
    using B = Bound;
    static const std::vector<KeySpec> keys = [] {
        std::vector<KeySpec> k;
        k.push_back({"preset", [](RunConfig& c, const std::string& s) { apply_preset(c, s); },
                     [](const RunConfig& c) { return c.preset; }});
        k.push_back(real_key("alpha_max", [](RunConfig& c) -> double& { return c.train.alpha_max; }, 0, B::open, 1, B::closed));
        k.push_back(int_key("ramp_iters", [](RunConfig& c) -> int& { return c.train.ramp_iters; }, 1, imax));
        k.push_back(int_key("total_iters", [](RunConfig& c) -> int& { return c.train.total_iters; }, 1, imax));
        k.push_back(real_key("beta", [](RunConfig& c) -> double& { return c.train.beta; }, 0, B::open, 1, B::closed));
        k.push_back(real_key("eta1", [](RunConfig& c) -> double& { return c.train.eta1; }, 0, B::closed, inf, B::open));
        k.push_back(real_key("eta2", [](RunConfig& c) -> double& { return c.train.eta2; }, 0, B::closed, inf, B::open));
        k.push_back(real_key("epsilon", [](RunConfig& c) -> double& { return c.train.epsilon; }, 0, B::open, inf, B::open));
        k.push_back(real_key("lr", [](RunConfig& c) -> double& { return c.train.lr; }, 0, B::open, inf, B::open));
        k.push_back(int_key("batch_size", [](RunConfig& c) -> int& { return c.train.batch_size; }, 1, imax));
        k.push_back(int_key("seed", [](RunConfig& c) -> std::uint64_t& { return c.train.seed; }, 0,
                            std::numeric_limits<long long>::max()));
        k.push_back(int_key("feature_dim", [](RunConfig& c) -> int& { return c.train.feature_dim; }, 0, imax));
        k.push_back({"scheme",
                     [](RunConfig& c, const std::string& s) {
                         try {
                             c.train.scheme = scheme_from_string(s);
                         } catch (const Error& e) {
                             throw ConfigError("scheme", e.what());
                         }
                     },
                     [](const RunConfig& c) { return to_string(c.train.scheme); }});
        k.push_back(int_key("weight_update_interval", [](RunConfig& c) -> int& { return c.train.weight_update_interval; }, 1, imax));
        k.push_back(int_key("solver_max_iter", [](RunConfig& c) -> int& { return c.train.solver_max_iter; }, 1, imax));
        k.push_back(real_key("solver_tol", [](RunConfig& c) -> double& { return c.train.solver_tol; }, 0, B::open, inf, B::open));
        k.push_back(real_key("init_scale", [](RunConfig& c) -> double& { return c.train.init_scale; }, 0, B::closed, inf, B::open));
        k.push_back(real_key("arpm_rho", [](RunConfig& c) -> double& { return c.train.arpm.rho; }, 0, B::closed, inf, B::open));
        k.push_back(int_key("arpm_steps", [](RunConfig& c) -> int& { return c.train.arpm.subgradient_steps; }, 1, imax));
        k.push_back(real_key("arpm_step_size", [](RunConfig& c) -> double& { return c.train.arpm.step_size; }, 0, B::open, inf, B::open));
        k.push_back(int_key("task_classes", [](RunConfig& c) -> int& { return c.task.K; }, 1, imax));
        k.push_back(int_key("task_shared", [](RunConfig& c) -> int& { return c.task.shared; }, 1, imax));
        k.push_back(int_key("task_dim", [](RunConfig& c) -> int& { return c.task.d; }, 1, imax));
        k.push_back(int_key("task_n_source", [](RunConfig& c) -> int& { return c.task.n_s; }, 1, imax));
        k.push_back(int_key("task_n_target", [](RunConfig& c) -> int& { return c.task.n_t; }, 1, imax));
        k.push_back(real_key("task_separation", [](RunConfig& c) -> double& { return c.task.separation; }, 0, B::open, inf, B::open));
        k.push_back(real_key("task_noise", [](RunConfig& c) -> double& { return c.task.noise; }, 0, B::open, inf, B::open));
        k.push_back(real_key("task_shift", [](RunConfig& c) -> double& { return c.task.shift; }, -inf, B::open, inf, B::open));
        k.push_back(int_key("task_seed", [](RunConfig& c) -> std::uint64_t& { return c.task.seed; }, 0,
                            std::numeric_limits<long long>::max()));
        k.push_back(int_key("seeds", [](RunConfig& c) -> int& { return c.seeds; }, 1, imax));
        k.push_back({"schemes",
                     [](RunConfig& c, const std::string& s) {
                         std::vector<Scheme> out;
                         std::stringstream ss(s);
                         std::string item;
                         while (std::getline(ss, item, ',')) {
                             try {
                                 out.push_back(scheme_from_string(trim(item)));
                             } catch (const Error& e) {
                                 throw ConfigError("schemes", e.what());
                             }
                         }
                         if (out.empty()) throw ConfigError("schemes", "empty scheme list");
                         c.schemes = out;
                     },
                     [](const RunConfig& c) {
                         std::string s;
                         for (std::size_t i = 0; i < c.schemes.size(); ++i) s += (i ? "," : "") + to_string(c.schemes[i]);
                         return s;
                     }});
        return k;
    }();
    return keys;
}

inline const KeySpec* find_key(const std::string& name)
{
    for (const auto& k : key_table())
        if (k.name == name) return &k;
    return nullptr;
}

}  // namespace detail

/// Cross-field checks, reported against the later key of each pair.
inline void validate_config(const RunConfig& c)
{
    if (c.train.ramp_iters > c.train.total_iters) throw ConfigError("ramp_iters", "must not exceed total_iters");
    if (c.task.shared > c.task.K) throw ConfigError("task_shared", "must not exceed task_classes");
    if (c.task.n_s < c.task.K) throw ConfigError("task_n_source", "must be >= task_classes");
    if (c.task.n_t < c.task.shared) throw ConfigError("task_n_target", "must be >= task_shared");
    try {
        c.train.validate();
        c.task.validate();
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError("config", e.what());
    }
}

using KeyValues = std::vector<std::pair<std::string, std::string>>;

/// `key = value` lines; `#` starts a comment.
inline KeyValues parse_key_values(std::istream& in, const std::string& origin = "config")
{
    KeyValues kv;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(lineno), "expected 'key = value'");
        kv.emplace_back(detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
    }
    return kv;
}

/// `key=value` flag strings.
inline KeyValues parse_flag_values(const std::vector<std::string>& flags)
{
    KeyValues kv;
    for (const auto& f : flags) {
        const auto eq = f.find('=');
        if (eq == std::string::npos) throw ConfigError(f, "expected key=value");
        kv.emplace_back(detail::trim(f.substr(0, eq)), detail::trim(f.substr(eq + 1)));
    }
    return kv;
}

/// Defaults, then the preset (a flag preset beats a file preset), then file
/// keys, then flag keys.
inline RunConfig resolve_config(const KeyValues& file, const KeyValues& flags)
{
    RunConfig c;
    std::string preset = "default";
    for (const auto* src : {&file, &flags})
        for (const auto& [k, v] : *src)
            if (k == "preset") preset = v;
    apply_preset(c, preset);
    for (const auto* src : {&file, &flags}) {
        for (const auto& [k, v] : *src) {
            if (k == "preset") continue;
            const auto* spec = detail::find_key(k);
            if (!spec) throw ConfigError(k, "unknown key");
            spec->set(c, v);
        }
    }
    validate_config(c);
    return c;
}

inline RunConfig parse_config(const std::string& file_path, const std::vector<std::string>& flags)
{
    KeyValues file;
    if (!file_path.empty()) {
        std::ifstream in(file_path);
        if (!in) throw ConfigError("config", "cannot read '" + file_path + "'");
        file = parse_key_values(in, file_path);
    }
    return resolve_config(file, parse_flag_values(flags));
}

inline std::string echo_config(const RunConfig& c)
{
    std::string out;
    for (const auto& k : detail::key_table()) out += k.name + " = " + k.get(c) + "\n";
    return out;
}

}  // namespace potpda
