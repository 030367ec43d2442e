#pragma once

// Declarative experiment runner: TOML configs in, CSV / SVG / JSON artifacts out.
// Needs the vendored toml.hpp and json.hpp on the include path.

#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <numbers>
#include <optional>
#include <regex>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <tuple>
#include <variant>
#include <vector>

#include <json.hpp>
#include <toml.hpp>

#include "greedyq/diagnostics.hpp"
#include "greedyq/distributions.hpp"
#include "greedyq/greedy1d.hpp"
#include "greedyq/greedy_nd.hpp"
#include "greedyq/io.hpp"
#include "greedyq/parallel.hpp"
#include "greedyq/qmc.hpp"
#include "greedyq/quantizer.hpp"

namespace greedyq {

using json = nlohmann::ordered_json;

inline constexpr int kSummarySchemaVersion = 1;

/// Bad configuration; `line` is the 1-based TOML line (0 if unknown).
class ConfigError : public std::runtime_error {
public:
    ConfigError(int line, const std::string& what)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
    int line() const noexcept { return line_; }

private:
    int line_;
};

struct ExperimentConfig {
    std::string experiment;
    std::string label;
    std::string distribution;
    double p = 2.0;
    std::vector<double> q;
    std::size_t n_max = 0;
    std::string solver;
    std::optional<std::uint64_t> seed;
    std::size_t mc_per_level = 1000;
    std::size_t mc_base = 0;
    std::size_t eval_samples = 1'000'000;
    std::string start_rule = "max_gain";
    int max_sweeps = 50;
    std::size_t window_lo = 0;  // 0 selects the experiment default
    double b = 0.25;
    double exponent = 1.0;
    std::size_t quad_points = 256;
    std::filesystem::path output_dir;
    int line = 0;  // where the experiment was declared
};

inline const std::vector<std::string>& experiment_names() {
    static const std::vector<std::string> names = {"greedy1d_uniform", "greedy1d_normal", "greedy_nd_normal2",
                                                   "vdc_constants",    "concat_compare",  "mismatch",
                                                   "cubature_compare", "diagnostics"};
    return names;
}

inline bool is_stochastic(const std::string& experiment) { return experiment == "greedy_nd_normal2"; }

// ---------------------------------------------------------------------------
// Defaults

struct ExperimentDefaults {
    std::string distribution;
    std::size_t n_max;
    std::string solver;
    std::vector<double> q;
};

inline ExperimentDefaults experiment_defaults(const std::string& e) {
    if (e == "greedy1d_uniform") return {"uniform01", 5000, "lloyd", {}};
    if (e == "greedy1d_normal") return {"normal(0,1)", 4001, "lloyd", {}};
    if (e == "greedy_nd_normal2") return {"normal_nd(2)", 200, "rlloyd", {}};
    if (e == "vdc_constants") return {"uniform01", 4096, "", {}};
    if (e == "concat_compare") return {"uniform01", 4096, "lloyd", {}};
    if (e == "mismatch") return {"uniform01", 5000, "lloyd", {2.5, 3.0}};
    if (e == "cubature_compare") return {"uniform01", 1024, "lloyd", {}};
    if (e == "diagnostics") return {"normal(0,1)", 1000, "lloyd", {2.0, 2.5}};
    throw std::invalid_argument("unknown experiment '" + e + "'");
}

// ---------------------------------------------------------------------------
// Config parsing

namespace detail {

inline int line_of(const toml::node& n) { return static_cast<int>(n.source().begin.line); }

/// "1000*N", "500 + 1000*N" or a plain count.
inline std::pair<std::size_t, std::size_t> parse_sample_rule(const std::string& s, int line) {
    static const std::regex with_n(R"(^\s*(?:(\d+)\s*\+\s*)?(\d+)\s*\*\s*N\s*$)");
    static const std::regex constant(R"(^\s*(\d+)\s*$)");
    std::smatch m;
    if (std::regex_match(s, m, with_n))
        return {m[1].matched ? std::stoull(m[1].str()) : 0, std::stoull(m[2].str())};
    if (std::regex_match(s, m, constant)) return {std::stoull(m[1].str()), 0};
    throw ConfigError(line, "M must look like \"1000*N\", \"500 + 1000*N\" or \"5000\", got \"" + s + "\"");
}

inline double as_real(const toml::node& n, const std::string& key) {
    if (auto v = n.value<double>()) return *v;
    throw ConfigError(line_of(n), key + " must be a number");
}

inline std::int64_t as_int(const toml::node& n, const std::string& key) {
    if (!n.is_integer()) throw ConfigError(line_of(n), key + " must be an integer");
    return *n.value<std::int64_t>();
}

inline std::size_t as_count(const toml::node& n, const std::string& key, std::int64_t min) {
    const auto v = as_int(n, key);
    if (v < min) throw ConfigError(line_of(n), key + " must be >= " + std::to_string(min));
    return static_cast<std::size_t>(v);
}

inline std::string as_string(const toml::node& n, const std::string& key) {
    if (auto v = n.value<std::string>()) return *v;
    throw ConfigError(line_of(n), key + " must be a string");
}

inline std::uint64_t as_seed(const toml::node& n) {
    if (n.is_integer()) {
        const auto v = *n.value<std::int64_t>();
        if (v < 0) throw ConfigError(line_of(n), "seed must be non-negative");
        return static_cast<std::uint64_t>(v);
    }
    if (auto s = n.value<std::string>()) {
        try {
            std::size_t used = 0;
            const auto v = std::stoull(*s, &used, 0);
            if (used == s->size()) return v;
        } catch (const std::exception&) {
        }
        throw ConfigError(line_of(n), "seed string must be a decimal or 0x-prefixed 64-bit integer");
    }
    throw ConfigError(line_of(n), "seed must be an integer or a string holding a 64-bit integer");
}

inline void apply_key(ExperimentConfig& c, const std::string& key, const toml::node& n) {
    if (key == "experiment") c.experiment = as_string(n, key);
    else if (key == "label") c.label = as_string(n, key);
    else if (key == "distribution") c.distribution = as_string(n, key);
    else if (key == "p") c.p = as_real(n, key);
    else if (key == "q") {
        c.q.clear();
        if (const auto* arr = n.as_array()) {
            for (const auto& e : *arr) c.q.push_back(as_real(e, "q"));
            if (c.q.empty()) throw ConfigError(line_of(n), "q must not be empty");
        } else {
            c.q.push_back(as_real(n, key));
        }
    } else if (key == "n_max" || key == "N_max") c.n_max = as_count(n, key, 1);
    else if (key == "solver") c.solver = as_string(n, key);
    else if (key == "seed") c.seed = as_seed(n);
    else if (key == "M") std::tie(c.mc_base, c.mc_per_level) = parse_sample_rule(as_string(n, key), line_of(n));
    else if (key == "mc_per_level") c.mc_per_level = as_count(n, key, 0);
    else if (key == "mc_base") c.mc_base = as_count(n, key, 0);
    else if (key == "eval_samples") c.eval_samples = as_count(n, key, 1);
    else if (key == "start_rule") c.start_rule = as_string(n, key);
    else if (key == "max_sweeps") c.max_sweeps = static_cast<int>(as_count(n, key, 1));
    else if (key == "window_lo") c.window_lo = as_count(n, key, 1);
    else if (key == "b") c.b = as_real(n, key);
    else if (key == "exponent") c.exponent = as_real(n, key);
    else if (key == "quad_points") c.quad_points = as_count(n, key, 1);
    else if (key == "output_dir") c.output_dir = as_string(n, key);
    else throw ConfigError(line_of(n), "unknown key '" + key + "'");
}

inline void apply_table(ExperimentConfig& c, const toml::table& t, bool skip_experiments) {
    for (const auto& [k, v] : t) {
        const std::string key(k.str());
        if (skip_experiments && key == "experiments") continue;
        apply_key(c, key, v);
    }
}

/// Fills defaults and checks the values that can be checked before running.
inline void finalize(ExperimentConfig& c, const std::map<std::string, int>& lines) {
    auto at = [&](const char* key) {
        const auto it = lines.find(key);
        return it == lines.end() ? c.line : it->second;
    };
    if (c.experiment.empty()) throw ConfigError(c.line, "missing key 'experiment'");
    const auto& names = experiment_names();
    if (std::find(names.begin(), names.end(), c.experiment) == names.end()) {
        std::string list;
        for (const auto& n : names) list += (list.empty() ? "" : ", ") + n;
        throw ConfigError(at("experiment"), "unknown experiment '" + c.experiment + "' (expected one of " + list + ")");
    }
    const auto d = experiment_defaults(c.experiment);
    if (c.distribution.empty()) c.distribution = d.distribution;
    if (c.n_max == 0) c.n_max = d.n_max;
    if (c.solver.empty()) c.solver = d.solver;
    if (c.q.empty()) c.q = d.q;
    if (c.label.empty()) c.label = c.experiment;
    if (c.output_dir.empty()) c.output_dir = std::filesystem::path("out") / c.label;
    for (char ch : c.label)
        if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '-'))
            throw ConfigError(at("label"), "label may only contain letters, digits, '_' and '-'");

    AnyDistribution law;
    try {
        law = parse_distribution(c.distribution);
    } catch (const std::exception& e) {
        throw ConfigError(at("distribution"), e.what());
    }
    const bool scalar = std::holds_alternative<Dist1DPtr>(law);
    if (c.experiment != "greedy_nd_normal2" && !scalar)
        throw ConfigError(at("distribution"), c.experiment + " needs a one-dimensional law, got " + c.distribution);
    if ((c.experiment == "vdc_constants" || c.experiment == "concat_compare" || c.experiment == "cubature_compare") &&
        !is_unit_uniform(*std::get<Dist1DPtr>(law)))
        throw ConfigError(at("distribution"), c.experiment + " is defined for uniform01 only");

    if (!(c.p >= 1.0)) throw ConfigError(at("p"), "p must be >= 1");
    for (double q : c.q)
        if (!(q >= 1.0)) throw ConfigError(at("q"), "q values must be >= 1");
    if (c.experiment != "vdc_constants" && c.experiment != "diagnostics" && c.p != 2.0)
        throw ConfigError(at("p"), c.experiment + " builds L2 greedy sequences; p must be 2");

    try {
        if (c.experiment == "greedy_nd_normal2") {
            parse_solver_nd(c.solver);
            parse_start_rule(c.start_rule);
        } else if (!c.solver.empty()) {
            parse_solver_1d(c.solver);
        }
    } catch (const std::exception& e) {
        throw ConfigError(at(c.solver.empty() ? "start_rule" : "solver"), e.what());
    }
    if (is_stochastic(c.experiment)) {
        if (!c.seed) throw ConfigError(c.line, c.experiment + " is stochastic; 'seed' is mandatory");
        if (c.mc_base + c.mc_per_level < 1) throw ConfigError(at("M"), "M(N) must be >= 1");
    }
    const std::size_t min_n = c.experiment == "vdc_constants" ? 8 : c.experiment == "mismatch" ? 10 : 2;
    if (c.n_max < min_n) throw ConfigError(at("n_max"), c.experiment + " needs n_max >= " + std::to_string(min_n));
    if (c.window_lo > c.n_max) throw ConfigError(at("window_lo"), "window_lo exceeds n_max");
    if (!(c.b > 0.0 && c.b < 0.5)) throw ConfigError(at("b"), "b must lie in (0, 1/2)");
    if (!(c.exponent >= 0.0)) throw ConfigError(at("exponent"), "exponent must be >= 0");
}

inline std::map<std::string, int> key_lines(const toml::table& t) {
    std::map<std::string, int> out;
    for (const auto& [k, v] : t) out[std::string(k.str())] = line_of(v);
    return out;
}

}  // namespace detail

/**
 * Reads one experiment from the top-level table, or a batch from
 * `[[experiments]]`; top-level keys then act as defaults for every entry.
 */
inline std::vector<ExperimentConfig> parse_config(const toml::table& root) {
    if (root.empty()) throw ConfigError(0, "empty config");
    std::vector<ExperimentConfig> out;
    ExperimentConfig base;
    base.line = 1;
    detail::apply_table(base, root, true);
    auto lines = detail::key_lines(root);
    if (const auto* node = root.get("experiments")) {
        const auto* arr = node->as_array();
        if (!arr || !arr->is_array_of_tables()) throw ConfigError(detail::line_of(*node), "'experiments' must be [[experiments]] tables");
        for (const auto& e : *arr) {
            const auto& t = *e.as_table();
            ExperimentConfig c = base;
            c.line = detail::line_of(t);
            detail::apply_table(c, t, false);
            auto l = lines;
            for (const auto& [k, v] : detail::key_lines(t)) l[k] = v;
            detail::finalize(c, l);
            out.push_back(std::move(c));
        }
        if (out.empty()) throw ConfigError(detail::line_of(*node), "empty experiments batch");
    } else {
        detail::finalize(base, lines);
        out.push_back(std::move(base));
    }
    std::set<std::filesystem::path> dirs;
    for (const auto& c : out)
        if (!dirs.insert(std::filesystem::absolute(c.output_dir).lexically_normal()).second)
            throw ConfigError(c.line, "output_dir '" + c.output_dir.string() + "' is used by two experiments");
    return out;
}

inline std::vector<ExperimentConfig> parse_config_text(std::string_view text, const std::string& source = "config") {
    toml::table root;
    try {
        root = toml::parse(text, source);
    } catch (const toml::parse_error& e) {
        throw ConfigError(static_cast<int>(e.source().begin.line), std::string(e.description()));
    }
    return parse_config(root);
}

inline std::vector<ExperimentConfig> parse_config_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(0, "cannot open config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), path.string());
}

// ---------------------------------------------------------------------------
// Constants

/// J~_{p,1}: limit of N e_{p,N}(U[0,1]) = 1 / (2 (p+1)^(1/p)).
inline double zador_unit_interval(double p) { return 1.0 / (2.0 * std::pow(p + 1.0, 1.0 / p)); }

/// Zador limit of N e_{p,N} for a scalar law with density.
inline double zador_constant_1d(const Distribution1D& dist, double p) {
    const auto I = zador_integral(dist, p, p);
    if (I.infinite || I.likely_infinite) return kInf;
    return zador_unit_interval(p) * std::pow(I.value, (1.0 + p) / p);
}

/// Zador limit of sqrt(N) e_{2,N} for the planar laws with a closed form; nullopt otherwise.
inline std::optional<double> zador_constant_planar(const std::string& name, std::size_t dim, double p) {
    if (dim != 2 || p != 2.0) return std::nullopt;
    const double hex = std::sqrt(5.0 / (18.0 * std::sqrt(3.0)));  // J~_{2,2}
    if (name.rfind("uniform_nd", 0) == 0) return hex;
    if (name.rfind("normal_nd", 0) == 0) return 2.0 * std::sqrt(2.0 * std::numbers::pi) * hex;
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Experiments

namespace detail {

inline json flagged_json(const FlaggedValue& v) {
    json j;
    j["value"] = std::isfinite(v.value) ? json(v.value) : json(nullptr);
    j["infinite"] = v.infinite;
    j["likely_infinite"] = v.likely_infinite;
    j["refinements"] = v.refinements;
    return j;
}

inline json maybe(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline Greedy1DOptions options_1d(const ExperimentConfig& c) {
    Greedy1DOptions o;
    o.solver = parse_solver_1d(c.solver.empty() ? "lloyd" : c.solver);
    return o;
}

inline bool strictly_decreasing(const std::vector<double>& e) {
    for (std::size_t i = 1; i < e.size(); ++i)
        if (!(e[i] < e[i - 1])) return false;
    return true;
}

inline std::vector<double> iota_n(std::size_t n) {
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = static_cast<double>(i + 1);
    return x;
}

inline std::string sequence_csv_1d(const std::vector<double>& pts) {
    io::Table t{{"index", "a"}, {}};
    for (std::size_t i = 0; i < pts.size(); ++i) t.rows.push_back({static_cast<double>(i + 1), pts[i]});
    return io::to_csv(t);
}

inline std::string trajectory_csv_1d(const GreedySequence& seq, const std::vector<double>& residuals) {
    io::Table t{{"N", "e_p", "residual", "iters"}, {}};
    for (std::size_t n = 0; n < seq.size(); ++n)
        t.rows.push_back({static_cast<double>(n + 1), seq.trajectory[n].value, residuals[n],
                          static_cast<double>(seq.iterations[n])});
    return io::to_csv(t);
}

/// scaled.csv: N followed by one column per named series; the shape `compare` consumes.
inline std::string scaled_csv(const std::vector<double>& n, const std::vector<io::Series>& cols) {
    io::Table t{{"N"}, {}};
    for (const auto& s : cols) t.header.push_back(s.name);
    for (std::size_t i = 0; i < n.size(); ++i) {
        std::vector<double> row{n[i]};
        for (const auto& s : cols) row.push_back(s.y[i]);
        t.rows.push_back(std::move(row));
    }
    return io::to_csv(t);
}

inline json summary_head(const ExperimentConfig& c) {
    json j;
    j["schema_version"] = kSummarySchemaVersion;
    j["experiment"] = c.experiment;
    j["label"] = c.label;
    j["distribution"] = c.distribution;
    j["n_max"] = c.n_max;
    j["p"] = c.p;
    if (c.seed) j["seed"] = std::to_string(*c.seed);
    return j;
}

inline json run_greedy1d(const ExperimentConfig& c, io::ArtifactSet& out, bool odd_levels) {
    const auto dist = parse_distribution_1d(c.distribution);
    const auto opt = options_1d(c);
    const GreedySequence seq = dist->symmetric_about_zero() && dist->positive_half()
                                   ? build_greedy_symmetric(*dist, c.n_max, opt)
                                   : build_greedy_1d(*dist, c.n_max, opt);
    const std::size_t n = seq.size();
    const auto residuals = stationarity_residuals(*dist, seq.coords);
    std::vector<double> e(n), scaled(n);
    for (std::size_t i = 0; i < n; ++i) {
        e[i] = seq.trajectory[i].value;
        scaled[i] = static_cast<double>(i + 1) * e[i];
    }
    out.add("sequence.csv", sequence_csv_1d(seq.coords));
    out.add("trajectory.csv", trajectory_csv_1d(seq, residuals));

    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < n; ++i) {
        if (odd_levels && (i + 1) % 2 == 0) continue;
        xs.push_back(static_cast<double>(i + 1));
        ys.push_back(scaled[i]);
    }
    const double zador = zador_constant_1d(*dist, 2.0);
    out.add("scaled.csv", scaled_csv(xs, {{c.label, xs, ys}}));
    out.add("scaled.svg", io::svg_line_plot(c.label + ": N e_2 vs N", "N", "N e_2", {{c.label, xs, ys}},
                                            {{"Zador limit", zador}}));

    json j = summary_head(c);
    j["solver"] = seq.solver;
    j["levels"] = n;
    j["support_exhausted"] = seq.support_exhausted;
    j["zador_constants"] = {{c.label, maybe(zador)}};
    if (n >= 2) {
        const std::size_t lo = c.window_lo ? c.window_lo : std::min<std::size_t>(100, n);
        const std::size_t tail = std::max<std::size_t>(1, n / 2);
        double sup = -kInf, inf = kInf;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const auto N = static_cast<std::size_t>(xs[i]);
            if (N >= lo) sup = std::max(sup, ys[i]);
            if (N >= tail) inf = std::min(inf, ys[i]);
        }
        j["limsup_proxy"] = maybe(sup);
        j["limsup_window"] = {lo, n};
        j["liminf_proxy"] = maybe(inf);
        j["liminf_window"] = {tail, n};
        if (odd_levels) j["levels_used"] = "odd";
    }
    const double max_res = *std::max_element(residuals.begin(), residuals.end());
    j["max_stationarity_residual"] = max_res;
    j["checks"] = {{"strictly_decreasing", strictly_decreasing(e)}, {"stationary_1e-9", max_res <= 1e-9}};
    return j;
}

inline json run_greedy_nd(const ExperimentConfig& c, io::ArtifactSet& out) {
    const auto dist = parse_distribution_nd(c.distribution);
    StochasticRunConfig cfg;
    cfg.seed = *c.seed;
    cfg.mc_per_level = c.mc_per_level;
    cfg.mc_base = c.mc_base;
    cfg.eval_samples = c.eval_samples;
    cfg.max_sweeps = c.max_sweeps;
    cfg.start_rule = parse_start_rule(c.start_rule);
    const SolverND solver = parse_solver_nd(c.solver);
    const GreedySequence seq = build_greedy_nd(*dist, c.n_max, cfg, solver);
    const std::size_t d = seq.dim, n = seq.size();
    const double rate = 1.0 / static_cast<double>(d);

    io::Table pts{{"index"}, {}};
    for (std::size_t k = 0; k < d; ++k) pts.header.push_back("x" + std::to_string(k + 1));
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> row{static_cast<double>(i + 1)};
        for (double v : seq.point(i)) row.push_back(v);
        pts.rows.push_back(std::move(row));
    }
    out.add("sequence.csv", io::to_csv(pts));

    io::Table traj{{"N", "e2_hat", "std_error", d == 2 ? "sqrtN_e2" : "scaled_e2"}, {}};
    io::Table stat{{"N", "residual", "bound", "sweeps"}, {}};
    std::vector<double> xs = iota_n(n), ys(n);
    std::size_t passes = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& r = seq.trajectory[i];
        ys[i] = std::pow(static_cast<double>(i + 1), rate) * r.value;
        traj.rows.push_back({xs[i], r.value, r.std_error, ys[i]});
        stat.rows.push_back({xs[i], seq.residuals[i], seq.residual_bounds[i], static_cast<double>(seq.iterations[i])});
        passes += seq.residuals[i] <= seq.residual_bounds[i];
    }
    out.add("trajectory.csv", io::to_csv(traj));
    out.add("stationarity.csv", io::to_csv(stat));
    const auto zador = zador_constant_planar(dist->name(), d, 2.0);
    out.add("scaled.csv", scaled_csv(xs, {{c.label, xs, ys}}));
    std::vector<io::RefLine> refs;
    if (zador) refs.push_back({"Zador limit", *zador});
    out.add("scaled.svg", io::svg_line_plot(c.label + ": N^(1/d) e_2 vs N", "N", "N^(1/d) e_2", {{c.label, xs, ys}}, refs));

    const std::size_t lo = c.window_lo ? c.window_lo : std::max<std::size_t>(1, 3 * n / 4);
    const auto [wmin, wmax] = window_extrema(ys, lo, n);
    json j = summary_head(c);
    j["dimension"] = d;
    j["solver"] = seq.solver;
    j["status"] = seq.status;
    j["start_rule"] = c.start_rule;
    j["M"] = {{"base", c.mc_base}, {"per_level", c.mc_per_level}};
    j["eval_samples"] = c.eval_samples;
    j["zador_constants"] = {{c.label, zador ? json(*zador) : json(nullptr)}};
    j["sup_scaled"] = *std::max_element(ys.begin(), ys.end());
    j["window"] = {lo, n};
    j["window_min"] = wmin;
    j["window_max"] = wmax;
    j["final_e2"] = seq.trajectory.back().value;
    j["final_std_error"] = seq.trajectory.back().std_error;
    j["stationarity_passes"] = passes;
    j["checks"] = {{"all_stationary", passes == n}};
    return j;
}

inline json run_vdc(const ExperimentConfig& c, io::ArtifactSet& out) {
    const auto t = vdc_quantization_constants(c.p, c.n_max);
    const auto xs = iota_n(c.n_max);
    const double J = zador_unit_interval(c.p);
    out.add("sequence.csv", sequence_csv_1d(vdc(2, c.n_max)));
    out.add("scaled.csv", scaled_csv(xs, {{c.label, xs, t.values}}));
    out.add("scaled.svg", io::svg_line_plot(c.label + ": N e_p vs N (Van der Corput)", "N", "N e_p",
                                            {{c.label, xs, t.values}}, {{"J~_{p,1}", J}}));
    json j = summary_head(c);
    j["zador_constants"] = {{c.label, J}};
    j["liminf_proxy"] = t.liminf_proxy;
    j["limsup_proxy"] = t.limsup_proxy;
    j["window"] = {std::max<std::size_t>(1, c.n_max / 2), c.n_max};
    return j;
}

inline json run_concat(const ExperimentConfig& c, io::ArtifactSet& out) {
    UniformDistribution u;
    const std::size_t n = c.n_max;
    std::size_t levels = 1;
    while ((std::size_t{1} << levels) - 1 < n) ++levels;
    auto cat = concatenated_sequence(u, levels);
    cat.resize(n);
    const auto greedy = build_greedy_1d(u, n, options_1d(c));
    const auto xs = iota_n(n);
    const auto sg = scaled_trajectory_1d(u, greedy.coords, 2.0);
    const auto sv = scaled_trajectory_1d(u, vdc(2, n), 2.0);
    const auto sc = scaled_trajectory_1d(u, cat, 2.0);
    std::vector<double> opt(n);
    for (std::size_t i = 0; i < n; ++i)
        opt[i] = static_cast<double>(i + 1) * distortion_exact_1d(u, Quantizer::scalar(optimal_uniform_grid(i + 1)), 2.0).value;
    const std::vector<io::Series> cols = {{"greedy", xs, sg.values}, {"vdc", xs, sv.values},
                                          {"concat", xs, sc.values}, {"optimal", xs, opt}};
    const double J = zador_unit_interval(2.0);
    out.add("sequence_concat.csv", sequence_csv_1d(cat));
    out.add("scaled.csv", scaled_csv(xs, cols));
    out.add("scaled.svg", io::svg_line_plot("N e_2 vs N on U[0,1]", "N", "N e_2", cols, {{"J~_{2,1}", J}, {"2 J~_{2,1}", 2 * J}}));

    // e_1 <= D*_N for the Van der Corput prefixes
    const std::size_t n_disc = std::min<std::size_t>(n, 1024);
    const auto pts = vdc(2, n_disc);
    const auto e1 = distortion_trajectory_1d(u, pts, 1.0);
    std::size_t e1_fail = 0;
    io::Table disc{{"N", "e1", "dstar"}, {}};
    for (std::size_t i = 0; i < n_disc; ++i) {
        const double ds = star_discrepancy_1d(std::vector<double>(pts.begin(), pts.begin() + static_cast<std::ptrdiff_t>(i + 1)));
        disc.rows.push_back({static_cast<double>(i + 1), e1[i], ds});
        e1_fail += !(e1[i] <= ds);
    }
    out.add("discrepancy.csv", io::to_csv(disc));

    const std::size_t lo = c.window_lo ? c.window_lo : std::min<std::size_t>(100, n);
    const double greedy_sup = window_extrema(sg.values, lo, n).second;
    const double vdc_sup = sv.limsup_proxy;
    const double concat_max = *std::max_element(sc.values.begin(), sc.values.end());
    const double concat_min_tail = n >= 64 ? window_extrema(sc.values, 64, n).first : kInf;
    json j = summary_head(c);
    j["zador_constants"] = {{"greedy", J}, {"vdc", J}, {"concat", J}, {"optimal", J}};
    j["greedy_limsup_proxy"] = greedy_sup;
    j["vdc_limsup_proxy"] = vdc_sup;
    j["vdc_liminf_proxy"] = sv.liminf_proxy;
    j["concat_max"] = concat_max;
    j["concat_min_from_64"] = maybe(concat_min_tail);
    j["e1_le_dstar_upto"] = n_disc;
    j["e1_le_dstar_failures"] = e1_fail;
    j["checks"] = {{"concat_max_le_2J", concat_max <= 2 * J},
                   {"e1_le_dstar", e1_fail == 0},
                   {"greedy_below_vdc", greedy_sup < vdc_sup}};
    return j;
}

inline json run_mismatch(const ExperimentConfig& c, io::ArtifactSet& out) {
    const auto dist = parse_distribution_1d(c.distribution);
    const auto seq = build_greedy_1d(*dist, c.n_max, options_1d(c));
    const std::size_t n = seq.size();
    const auto xs = iota_n(n);
    std::vector<io::Series> cols;
    json per_q = json::array();
    json zc = json::object();
    for (double q : c.q) {
        const auto v = mismatch_trajectory(*dist, seq, q);
        std::string name = "q" + io::format_double(q);
        const auto early = window_extrema(v, std::max<std::size_t>(1, n / 10), std::max<std::size_t>(1, n / 5));
        const auto tail = window_extrema(v, std::max<std::size_t>(1, n / 2), n);
        per_q.push_back({{"q", q},
                         {"early_window", {std::max<std::size_t>(1, n / 10), std::max<std::size_t>(1, n / 5)}},
                         {"early_max", early.second},
                         {"tail_window", {std::max<std::size_t>(1, n / 2), n}},
                         {"tail_max", tail.second},
                         {"ratio", tail.second / early.second},
                         {"bounded", tail.second <= 1.1 * early.second}});
        zc[name] = maybe(zador_constant_1d(*dist, q));
        cols.push_back({name, xs, v});
    }
    out.add("sequence.csv", sequence_csv_1d(seq.coords));
    out.add("scaled.csv", scaled_csv(xs, cols));
    out.add("scaled.svg", io::svg_line_plot(c.label + ": N e_q of the L2 greedy sequence", "N", "N e_q", cols));
    json j = summary_head(c);
    j["zador_constants"] = zc;
    j["mismatch"] = per_q;
    return j;
}

inline json run_cubature(const ExperimentConfig& c, io::ArtifactSet& out) {
    UniformDistribution u;
    const std::size_t n = c.n_max;
    struct TestFn {
        std::string name;
        std::function<double(double)> f;
        double lipschitz;
    };
    const std::vector<TestFn> fns = {{"square", [](double x) { return x * x; }, 2.0},
                                     {"exp", [](double x) { return std::exp(x); }, std::numbers::e},
                                     {"kink", [](double x) { return std::abs(x - 1.0 / 3.0); }, 1.0}};
    const auto greedy = build_greedy_1d(u, n, options_1d(c));
    const auto v = vdc(2, n);
    std::size_t levels = 1;
    while ((std::size_t{1} << levels) - 1 < n) ++levels;
    auto cat = concatenated_sequence(u, levels);
    cat.resize(n);
    const auto e1 = distortion_trajectory_1d(u, greedy.coords, 1.0);

    io::Table t{{"N"}, {}};
    for (const auto& f : fns)
        for (const char* m : {"greedy", "vdc", "concat"}) t.header.push_back(f.name + "_" + m);
    std::vector<double> exact;
    for (const auto& f : fns) exact.push_back(quad::integrate(f.f, 0.0, 1.0).value);
    std::size_t bound_fail = 0;
    for (std::size_t m = 1; m <= n; ++m) {
        const auto qg = greedy.prefix(m);
        const auto w = voronoi_weights_exact_1d(u, qg);
        const auto qv = Quantizer::scalar(std::vector<double>(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(m)));
        const auto qc = Quantizer::scalar(std::vector<double>(cat.begin(), cat.begin() + static_cast<std::ptrdiff_t>(m)));
        std::vector<double> row{static_cast<double>(m)};
        for (std::size_t k = 0; k < fns.size(); ++k) {
            auto f = [&](std::span<const double> x) { return fns[k].f(x[0]); };
            const double eg = std::abs(cubature(f, qg, w) - exact[k]);
            row.push_back(eg);
            row.push_back(std::abs(cubature(f, qv) - exact[k]));
            row.push_back(std::abs(cubature(f, qc) - exact[k]));
            bound_fail += !(eg <= fns[k].lipschitz * e1[m - 1] * (1 + 1e-12) + 1e-15);
        }
        t.rows.push_back(std::move(row));
    }
    out.add("errors.csv", io::to_csv(t));
    std::vector<io::Series> plot;
    for (const char* m : {"greedy", "vdc", "concat"}) {
        const std::size_t col = t.column(std::string("kink_") + m);
        io::Series s{std::string("kink ") + m, {}, {}};
        for (const auto& r : t.rows) {
            s.x.push_back(r[0]);
            s.y.push_back(r[0] * r[col]);
        }
        plot.push_back(std::move(s));
    }
    out.add("errors.svg", io::svg_line_plot("N |error| for |x - 1/3| on U[0,1]", "N", "N |error|", plot));

    json j = summary_head(c);
    json fj = json::array();
    bool proinov_ok = true;
    for (std::size_t k = 0; k < fns.size(); ++k) {
        const auto pc = proinov_bound_check(v, fns[k].f, fns[k].lipschitz);
        proinov_ok = proinov_ok && pc.lhs <= pc.rhs;
        const auto& last = t.rows.back();
        fj.push_back({{"function", fns[k].name},
                      {"lipschitz", fns[k].lipschitz},
                      {"greedy_error", last[1 + 3 * k]},
                      {"vdc_error", last[2 + 3 * k]},
                      {"concat_error", last[3 + 3 * k]},
                      {"vdc_proinov_lhs", pc.lhs},
                      {"vdc_proinov_rhs", pc.rhs}});
    }
    j["functions"] = fj;
    j["checks"] = {{"greedy_error_le_L_e1", bound_fail == 0}, {"vdc_proinov", proinov_ok}};
    return j;
}

inline json run_diagnostics(const ExperimentConfig& c, io::ArtifactSet& out) {
    const auto dist = parse_distribution_1d(c.distribution);
    const auto opt = options_1d(c);
    const GreedySequence seq = dist->symmetric_about_zero() && dist->positive_half()
                                   ? build_greedy_symmetric(*dist, c.n_max, opt)
                                   : build_greedy_1d(*dist, c.n_max, opt);
    io::Table psi{{"u", "xi", "psi"}, {}};
    for (int k = 0; k < 200; ++k) {
        const double uu = (k + 0.5) / 200.0;
        const double xi = dist->quantile(uu);
        psi.rows.push_back({uu, xi, maximal_function(*dist, seq, c.b, xi, seq.size()).value});
    }
    out.add("maximal_function.csv", io::to_csv(psi));

    json j = summary_head(c);
    j["b"] = c.b;
    j["exponent"] = c.exponent;
    j["maximal_function_integral"] = flagged_json(maximal_function_integral(*dist, seq, c.b, c.exponent, c.quad_points));
    json z = json::array();
    for (double q : c.q) {
        json e = flagged_json(zador_integral(*dist, c.p, q));
        e["q"] = q;
        z.push_back(e);
    }
    j["zador_integrals"] = z;
    json rec = json::array();
    for (auto [a1, cc, rho] : {std::tuple{1.0, 0.5, 1.0}, std::tuple{1.0, 0.1, 2.0}, std::tuple{0.5, 0.3, 0.5}}) {
        const auto r5 = recursion_bound_check(a1, cc, rho, 100'000);
        const auto r6 = recursion_bound_check(a1, cc, rho, 1'000'000);
        rec.push_back({{"A1", a1},
                       {"C", cc},
                       {"rho", rho},
                       {"K_1e5", r5.fitted_k},
                       {"K_1e6", r6.fitted_k},
                       {"stable_1pct", std::abs(r6.fitted_k - r5.fitted_k) <= 0.01 * r6.fitted_k},
                       {"plateau", r6.plateau}});
    }
    j["recursion"] = rec;
    return j;
}

}  // namespace detail

struct RunOutcome {
    bool ok = false;
    std::string error;
    json summary;
    std::vector<std::filesystem::path> artifacts;
};

/// Runs one experiment. Artifacts stay as `*.partial` unless every step succeeds.
inline RunOutcome run_experiment(const ExperimentConfig& c) {
    RunOutcome r;
    try {
        io::ArtifactSet out(c.output_dir);
        try {
            json s;
            if (c.experiment == "greedy1d_uniform") s = detail::run_greedy1d(c, out, false);
            else if (c.experiment == "greedy1d_normal") s = detail::run_greedy1d(c, out, true);
            else if (c.experiment == "greedy_nd_normal2") s = detail::run_greedy_nd(c, out);
            else if (c.experiment == "vdc_constants") s = detail::run_vdc(c, out);
            else if (c.experiment == "concat_compare") s = detail::run_concat(c, out);
            else if (c.experiment == "mismatch") s = detail::run_mismatch(c, out);
            else if (c.experiment == "cubature_compare") s = detail::run_cubature(c, out);
            else if (c.experiment == "diagnostics") s = detail::run_diagnostics(c, out);
            else throw std::invalid_argument("unknown experiment '" + c.experiment + "'");
            out.add("summary.json", s.dump(2) + "\n");
            r.artifacts = out.commit();
            r.summary = std::move(s);
            r.ok = true;
        } catch (const std::exception& e) {
            r.error = e.what();
            out.add("error.txt", r.error + "\n");
        }
    } catch (const std::exception& e) {
        r.error = e.what();
    }
    return r;
}

/// Runs a batch with up to thread_count() experiments in flight.
inline std::vector<RunOutcome> run_batch(const std::vector<ExperimentConfig>& configs) {
    std::vector<RunOutcome> out(configs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < configs.size();) out[i] = run_experiment(configs[i]);
    };
    const std::size_t workers = std::min<std::size_t>(thread_count(), configs.size());
    std::vector<std::thread> pool;
    for (std::size_t k = 1; k < workers; ++k) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    return out;
}

// ---------------------------------------------------------------------------
// compare

/**
 * Merges the scaled.csv files of several output directories (or csv paths)
 * on their common N column; a `<col>_ratio` column is added for every
 * column with a finite Zador constant in the neighbouring summary.json.
 */
inline io::Table compare_report(const std::vector<std::filesystem::path>& inputs) {
    if (inputs.empty()) throw std::invalid_argument("compare: no inputs");
    io::Table merged;
    std::vector<double> grid;
    std::filesystem::path grid_src;
    std::vector<std::vector<double>> cols;
    for (const auto& in : inputs) {
        const auto csv = std::filesystem::is_directory(in) ? in / "scaled.csv" : in;
        const auto t = io::read_csv(csv);
        if (t.header.empty() || t.header[0] != "N") throw std::runtime_error(csv.string() + ": first column must be N");
        std::vector<double> n;
        for (const auto& r : t.rows) n.push_back(r[0]);
        if (grid_src.empty()) {
            grid = n;
            grid_src = csv;
        } else if (n != grid) {
            throw std::runtime_error("N grids differ: " + grid_src.string() + " (" + std::to_string(grid.size()) +
                                     " rows) vs " + csv.string() + " (" + std::to_string(n.size()) + " rows)");
        }
        json summary;
        const auto sj = csv.parent_path() / "summary.json";
        if (std::filesystem::exists(sj)) {
            std::ifstream f(sj);
            summary = json::parse(f, nullptr, false);
        }
        for (std::size_t k = 1; k < t.header.size(); ++k) {
            std::string name = t.header[k];
            if (std::find(merged.header.begin(), merged.header.end(), name) != merged.header.end())
                name = csv.parent_path().filename().string() + "_" + name;
            merged.header.push_back(name);
            std::vector<double> col;
            for (const auto& r : t.rows) col.push_back(r[k]);
            cols.push_back(col);
            if (inputs.size() == 1) continue;
            if (summary.is_object() && summary.contains("zador_constants") &&
                summary["zador_constants"].contains(t.header[k]) &&
                summary["zador_constants"][t.header[k]].is_number()) {
                const double J = summary["zador_constants"][t.header[k]].get<double>();
                merged.header.push_back(name + "_ratio");
                for (double& v : col) v /= J;
                cols.push_back(col);
            }
        }
    }
    merged.header.insert(merged.header.begin(), "N");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        std::vector<double> row{grid[i]};
        for (const auto& c : cols) row.push_back(c[i]);
        merged.rows.push_back(std::move(row));
    }
    return merged;
}

// ---------------------------------------------------------------------------
// gen-config

inline std::string default_config(const std::string& experiment) {
    const auto d = experiment_defaults(experiment);
    std::ostringstream os;
    os << "experiment = \"" << experiment << "\"\n";
    os << "distribution = \"" << d.distribution << "\"\n";
    os << "n_max = " << d.n_max << "\n";
    if (experiment == "vdc_constants" || experiment == "diagnostics") os << "p = 2.0\n";
    if (!d.q.empty()) {
        os << "q = [";
        for (std::size_t i = 0; i < d.q.size(); ++i) os << (i ? ", " : "") << io::format_double(d.q[i]) << (d.q[i] == std::floor(d.q[i]) ? ".0" : "");
        os << "]\n";
    }
    if (!d.solver.empty()) os << "solver = \"" << d.solver << "\"\n";
    if (is_stochastic(experiment)) {
        os << "seed = 20240917\n";
        os << "M = \"1000*N\"\n";
        os << "eval_samples = 1000000\n";
        os << "start_rule = \"max_gain\"\n";
    }
    if (experiment == "diagnostics") os << "b = 0.25\nexponent = 1.0\nquad_points = 256\n";
    os << "output_dir = \"out/" << experiment << "\"\n";
    return os.str();
}

}  // namespace greedyq
