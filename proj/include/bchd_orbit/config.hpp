#pragma once

// Run configuration: TOML schema, parsing, writing, and construction of the configured system and schedule.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <toml.hpp>

#include "bchd.hpp"
#include "error.hpp"
#include "flow.hpp"
#include "linalg.hpp"
#include "models.hpp"
#include "solve.hpp"
#include "system.hpp"

namespace bchd_orbit {

inline constexpr int kSchemaVersion = 1;

using Row = std::vector<double>;
using Rows = std::vector<std::vector<double>>;

inline const std::vector<std::string>& pipeline_stage_names()
{
    static const std::vector<std::string> names{"series", "chain", "shooting", "dulac", "contraction", "simulate", "attractivity"};
    return names;
}

inline const std::vector<std::string>& builtin_model_names()
{
    static const std::vector<std::string> names{"cstr2", "cstr3", "linear", "harmonic"};
    return names;
}

struct ModelSpec {
    /// Built-in name or path to a model file with [system], [params] and [domain] sections.
    std::string model = "cstr2";
    std::map<std::string, double> params;
    /// Matrix parameters (linear model: a, b).
    std::map<std::string, Rows> matrices;
    Row domain_lower;
    Row domain_upper;
    bool operator==(const ModelSpec&) const = default;
};

struct ScheduleSpec {
    /// "symmetric-bang-bang" or "explicit".
    std::string scenario = "symmetric-bang-bang";
    double tau = 1.0;
    Row breakpoints;
    Rows values;
    bool operator==(const ScheduleSpec&) const = default;
};

struct PipelineSpec {
    std::vector<std::string> stages{"series", "chain", "shooting"};
    std::vector<int> orders{1, 2, 3, 4};
    /// "auto", "general", "appendix" or "recursive".
    std::string method = "auto";
    int order_cap = kDefaultOrderCap;
    Row guess;
    /// Empty: start shooting from the last chain equilibrium.
    Row shooting_guess;
    bool operator==(const PipelineSpec&) const = default;
};

struct CertifySpec {
    std::vector<int> dulac_orders{2, 3, 4};
    Row dulac_lower;
    Row dulac_upper;
    std::vector<int> dulac_grid;
    /// "lyapunov" (solve at the steady state with Q = I) or "explicit" (metric rows).
    std::string metric = "lyapunov";
    Rows metric_rows;
    double beta = 0.1;
    /// Controls of the steady state; empty means the centre of the control box.
    Row steady_controls;
    Row steady_guess;
    Row delta;
    std::vector<int> contraction_grid;
    bool operator==(const CertifySpec&) const = default;
};

struct SimulateSpec {
    /// Periods to sweep; empty means the configured tau only.
    Row taus;
    /// Fixed starts; empty means start each tau from its shooting solution.
    Rows starts;
    int periods = 1;
    int samples_per_segment = 50;
    bool operator==(const SimulateSpec&) const = default;
};

struct OutputSpec {
    std::string dir = "out";
    std::uint64_t seed = 0;
    int threads = 0;
    bool operator==(const OutputSpec&) const = default;
};

struct RunConfig {
    int schema_version = kSchemaVersion;
    ModelSpec system;
    ScheduleSpec controls;
    PipelineSpec pipeline;
    CertifySpec certify;
    SimulateSpec simulate;
    SolverConfig solver;
    ToleranceConfig integrator;
    OutputSpec output;
    /// Directory used to resolve relative model paths.
    std::string base_dir;

    bool has_stage(const std::string& s) const
    {
        return std::find(pipeline.stages.begin(), pipeline.stages.end(), s) != pipeline.stages.end();
    }

    std::optional<SeriesMethod> series_method() const
    {
        if (pipeline.method == "auto") return std::nullopt;
        return parse_series_method(pipeline.method);
    }

    void validate() const
    {
        if (schema_version != kSchemaVersion)
            throw InvalidArgument("config: unsupported schema_version " + std::to_string(schema_version));
        if (!(controls.tau > 0.0) || !std::isfinite(controls.tau)) throw InvalidArgument("config: controls.tau must be positive");
        if (controls.scenario != "symmetric-bang-bang" && controls.scenario != "explicit")
            throw InvalidArgument("config: unknown control scenario '" + controls.scenario + "'");
        for (const auto& s : pipeline.stages)
            if (std::find(pipeline_stage_names().begin(), pipeline_stage_names().end(), s) == pipeline_stage_names().end())
                throw InvalidArgument("config: unknown pipeline stage '" + s + "'");
        if (pipeline.method != "auto") parse_series_method(pipeline.method);
        if (pipeline.orders.empty()) throw InvalidArgument("config: pipeline.orders must be non-empty");
        for (int m : pipeline.orders)
            if (m < 1) throw InvalidArgument("config: orders must be >= 1");
        for (int m : certify.dulac_orders)
            if (m < 1) throw InvalidArgument("config: dulac orders must be >= 1");
        if (certify.metric != "lyapunov" && certify.metric != "explicit")
            throw InvalidArgument("config: certify.metric must be 'lyapunov' or 'explicit'");
        if (!(certify.beta > 0.0)) throw InvalidArgument("config: certify.beta must be positive");
        for (double t : simulate.taus)
            if (!(t > 0.0) || !std::isfinite(t)) throw InvalidArgument("config: simulate.taus must be positive");
        if (simulate.periods < 1) throw InvalidArgument("config: simulate.periods must be >= 1");
        if (simulate.samples_per_segment < 0) throw InvalidArgument("config: simulate.samples_per_segment must be >= 0");
        if (output.threads < 0) throw InvalidArgument("config: output.threads must be >= 0");
        solver.validate();
        integrator.validate();
    }

    bool operator==(const RunConfig& o) const
    {
        return schema_version == o.schema_version && system == o.system && controls == o.controls && pipeline == o.pipeline &&
               certify == o.certify && simulate == o.simulate && solver == o.solver && integrator == o.integrator &&
               output == o.output;
    }
};

inline Vec to_vec(const Row& r) { return Eigen::Map<const Vec>(r.data(), Eigen::Index(r.size())); }

inline Row to_row(const Vec& v) { return Row(v.data(), v.data() + v.size()); }

inline Mat to_mat(const Rows& rows, const char* what)
{
    if (rows.empty()) throw InvalidArgument(std::string(what) + ": empty matrix");
    Mat m(Eigen::Index(rows.size()), Eigen::Index(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != rows.front().size()) throw DimensionError(std::string(what) + ": ragged matrix rows");
        for (std::size_t j = 0; j < rows[i].size(); ++j) m(Eigen::Index(i), Eigen::Index(j)) = rows[i][j];
    }
    return m;
}

inline Rows to_rows(const Mat& m)
{
    Rows r(std::size_t(m.rows()));
    for (Eigen::Index i = 0; i < m.rows(); ++i) r[std::size_t(i)] = to_row(m.row(i).transpose());
    return r;
}

namespace detail {

class TableReader {
public:
    TableReader(const toml::table* t, std::string name) : t_(t), name_(std::move(name)) {}

    bool present() const { return t_ != nullptr; }

    template <class T>
    void scalar(const char* key, T& out)
    {
        const toml::node* n = get(key);
        if (!n) return;
        if constexpr (std::is_same_v<T, std::string>) {
            auto v = n->value<std::string>();
            if (!v) fail(key, "a string");
            out = *v;
        } else if constexpr (std::is_same_v<T, bool>) {
            auto v = n->value_exact<bool>();
            if (!v) fail(key, "a boolean");
            out = *v;
        } else if constexpr (std::is_integral_v<T>) {
            auto v = n->value_exact<std::int64_t>();
            if (!v) fail(key, "an integer");
            if constexpr (std::is_unsigned_v<T>)
                if (*v < 0) fail(key, "a non-negative integer");
            out = T(*v);
        } else {
            auto v = n->value<double>();
            if (!v) fail(key, "a number");
            out = *v;
        }
    }

    void row(const char* key, Row& out)
    {
        const toml::node* n = get(key);
        if (!n) return;
        out = parse_row(n, key);
    }

    void ints(const char* key, std::vector<int>& out)
    {
        const toml::node* n = get(key);
        if (!n) return;
        const auto* a = n->as_array();
        if (!a) fail(key, "an array of integers");
        out.clear();
        for (const auto& e : *a) {
            auto v = e.value_exact<std::int64_t>();
            if (!v) fail(key, "an array of integers");
            out.push_back(int(*v));
        }
    }

    void strings(const char* key, std::vector<std::string>& out)
    {
        const toml::node* n = get(key);
        if (!n) return;
        const auto* a = n->as_array();
        if (!a) fail(key, "an array of strings");
        out.clear();
        for (const auto& e : *a) {
            auto v = e.value<std::string>();
            if (!v) fail(key, "an array of strings");
            out.push_back(*v);
        }
    }

    void rows(const char* key, Rows& out)
    {
        const toml::node* n = get(key);
        if (!n) return;
        const auto* a = n->as_array();
        if (!a) fail(key, "an array of arrays");
        out.clear();
        for (const auto& e : *a) out.push_back(parse_row(&e, key));
    }

    /// Remaining keys, each a number or an array of number arrays.
    void free_params(std::map<std::string, double>& scalars, std::map<std::string, Rows>& matrices)
    {
        if (!t_) return;
        for (const auto& [k, v] : *t_) {
            const std::string key(k.str());
            if (used_.count(key)) continue;
            used_.insert(key);
            if (auto d = v.value<double>(); d && !v.is_string() && !v.is_boolean()) {
                scalars[key] = *d;
            } else if (v.is_array()) {
                Rows r;
                for (const auto& e : *v.as_array()) r.push_back(parse_row(&e, key.c_str()));
                matrices[key] = r;
            } else {
                fail(key.c_str(), "a number or a matrix");
            }
        }
    }

    void finish() const
    {
        if (!t_) return;
        for (const auto& [k, v] : *t_)
            if (!used_.count(std::string(k.str())))
                throw InvalidArgument("config: unknown key '" + std::string(k.str()) + "' in [" + name_ + "]");
    }

private:
    const toml::node* get(const char* key)
    {
        if (!t_) return nullptr;
        used_.insert(key);
        return t_->get(key);
    }

    Row parse_row(const toml::node* n, const char* key) const
    {
        const auto* a = n->as_array();
        if (!a) fail(key, "an array of numbers");
        Row r;
        for (const auto& e : *a) {
            auto v = e.value<double>();
            if (!v || e.is_string() || e.is_boolean()) fail(key, "an array of numbers");
            r.push_back(*v);
        }
        return r;
    }

    [[noreturn]] void fail(const char* key, const char* expected) const
    {
        throw InvalidArgument("config: [" + name_ + "] " + key + " must be " + expected);
    }

    const toml::table* t_;
    std::string name_;
    std::set<std::string> used_;
};

inline const toml::table* subtable(const toml::table& root, const char* name)
{
    const toml::node* n = root.get(name);
    if (!n) return nullptr;
    if (!n->is_table()) throw InvalidArgument(std::string("config: [") + name + "] must be a table");
    return n->as_table();
}

inline void read_model_sections(const toml::table& root, ModelSpec& m)
{
    TableReader sys(subtable(root, "system"), "system");
    sys.scalar("model", m.model);
    sys.finish();
    TableReader params(subtable(root, "params"), "params");
    params.free_params(m.params, m.matrices);
    TableReader dom(subtable(root, "domain"), "domain");
    dom.row("lower", m.domain_lower);
    dom.row("upper", m.domain_upper);
    dom.finish();
}

inline toml::array to_array(const Row& r)
{
    toml::array a;
    for (double v : r) a.push_back(v);
    return a;
}

inline toml::array to_array(const std::vector<int>& r)
{
    toml::array a;
    for (int v : r) a.push_back(v);
    return a;
}

inline toml::array to_array(const std::vector<std::string>& r)
{
    toml::array a;
    for (const auto& v : r) a.push_back(v);
    return a;
}

inline toml::array to_array(const Rows& r)
{
    toml::array a;
    for (const auto& row : r) a.push_back(to_array(row));
    return a;
}

} // namespace detail

/// Parse a configuration document; relative model paths resolve against `base_dir`.
inline RunConfig parse_config(std::string_view text, const std::string& base_dir = ".", const std::string& source = "config")
{
    toml::table root;
    try {
        root = toml::parse(text, source);
    } catch (const toml::parse_error& e) {
        std::ostringstream os;
        os << "config: " << e.description() << " at " << e.source().begin;
        throw InvalidArgument(os.str());
    }
    RunConfig c;
    c.base_dir = base_dir;
    {
        std::set<std::string> known{"schema_version", "system", "params", "controls", "domain", "pipeline",
                                    "certify",        "simulate", "solver", "integrator", "output"};
        for (const auto& [k, v] : root)
            if (!known.count(std::string(k.str()))) throw InvalidArgument("config: unknown key '" + std::string(k.str()) + "'");
        const toml::node* sv = root.get("schema_version");
        if (!sv || !sv->value_exact<std::int64_t>()) throw InvalidArgument("config: integer schema_version is required");
        c.schema_version = int(*sv->value_exact<std::int64_t>());
    }
    detail::read_model_sections(root, c.system);

    detail::TableReader ctl(detail::subtable(root, "controls"), "controls");
    ctl.scalar("scenario", c.controls.scenario);
    ctl.scalar("tau", c.controls.tau);
    ctl.row("breakpoints", c.controls.breakpoints);
    ctl.rows("values", c.controls.values);
    ctl.finish();

    detail::TableReader pipe(detail::subtable(root, "pipeline"), "pipeline");
    pipe.strings("stages", c.pipeline.stages);
    pipe.ints("orders", c.pipeline.orders);
    pipe.scalar("method", c.pipeline.method);
    pipe.scalar("order_cap", c.pipeline.order_cap);
    pipe.row("guess", c.pipeline.guess);
    pipe.row("shooting_guess", c.pipeline.shooting_guess);
    pipe.finish();

    detail::TableReader cert(detail::subtable(root, "certify"), "certify");
    cert.ints("dulac_orders", c.certify.dulac_orders);
    cert.row("dulac_lower", c.certify.dulac_lower);
    cert.row("dulac_upper", c.certify.dulac_upper);
    cert.ints("dulac_grid", c.certify.dulac_grid);
    cert.scalar("metric", c.certify.metric);
    cert.rows("metric_rows", c.certify.metric_rows);
    cert.scalar("beta", c.certify.beta);
    cert.row("steady_controls", c.certify.steady_controls);
    cert.row("steady_guess", c.certify.steady_guess);
    cert.row("delta", c.certify.delta);
    cert.ints("contraction_grid", c.certify.contraction_grid);
    cert.finish();

    detail::TableReader sim(detail::subtable(root, "simulate"), "simulate");
    sim.row("taus", c.simulate.taus);
    sim.rows("starts", c.simulate.starts);
    sim.scalar("periods", c.simulate.periods);
    sim.scalar("samples_per_segment", c.simulate.samples_per_segment);
    sim.finish();

    detail::TableReader sol(detail::subtable(root, "solver"), "solver");
    sol.scalar("tol_residual", c.solver.tol_residual);
    sol.scalar("max_iter", c.solver.max_iter);
    sol.scalar("fd_step_scale", c.solver.fd_step_scale);
    sol.scalar("damping", c.solver.damping);
    sol.scalar("armijo", c.solver.armijo);
    sol.scalar("max_backtracks", c.solver.max_backtracks);
    sol.scalar("max_condition", c.solver.max_condition);
    sol.scalar("step_tol", c.solver.step_tol);
    sol.scalar("converge_step", c.solver.converge_step);
    sol.finish();

    detail::TableReader integ(detail::subtable(root, "integrator"), "integrator");
    integ.scalar("rtol", c.integrator.rtol);
    integ.scalar("atol", c.integrator.atol);
    integ.scalar("max_step", c.integrator.max_step);
    integ.scalar("max_step_fraction", c.integrator.max_step_fraction);
    integ.scalar("initial_step", c.integrator.initial_step);
    integ.scalar("max_steps", c.integrator.max_steps);
    integ.finish();

    detail::TableReader out(detail::subtable(root, "output"), "output");
    out.scalar("dir", c.output.dir);
    out.scalar("seed", c.output.seed);
    out.scalar("threads", c.output.threads);
    out.finish();

    c.validate();
    return c;
}

inline std::string read_text_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidArgument("cannot open '" + path + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

inline RunConfig load_config(const std::string& path)
{
    const auto dir = std::filesystem::path(path).parent_path().string();
    return parse_config(read_text_file(path), dir.empty() ? "." : dir, path);
}

/// TOML document that parses back to an equal RunConfig.
inline std::string write_config(const RunConfig& c)
{
    using detail::to_array;
    toml::table root;
    root.insert("schema_version", c.schema_version);
    root.insert("system", toml::table{{"model", c.system.model}});
    toml::table params;
    for (const auto& [k, v] : c.system.params) params.insert(k, v);
    for (const auto& [k, v] : c.system.matrices) params.insert(k, to_array(v));
    root.insert("params", params);
    toml::table dom;
    if (!c.system.domain_lower.empty()) dom.insert("lower", to_array(c.system.domain_lower));
    if (!c.system.domain_upper.empty()) dom.insert("upper", to_array(c.system.domain_upper));
    root.insert("domain", dom);

    toml::table ctl{{"scenario", c.controls.scenario}, {"tau", c.controls.tau}};
    if (!c.controls.breakpoints.empty()) ctl.insert("breakpoints", to_array(c.controls.breakpoints));
    if (!c.controls.values.empty()) ctl.insert("values", to_array(c.controls.values));
    root.insert("controls", ctl);

    toml::table pipe{{"stages", to_array(c.pipeline.stages)},
                     {"orders", to_array(c.pipeline.orders)},
                     {"method", c.pipeline.method},
                     {"order_cap", c.pipeline.order_cap}};
    if (!c.pipeline.guess.empty()) pipe.insert("guess", to_array(c.pipeline.guess));
    if (!c.pipeline.shooting_guess.empty()) pipe.insert("shooting_guess", to_array(c.pipeline.shooting_guess));
    root.insert("pipeline", pipe);

    toml::table cert{{"dulac_orders", to_array(c.certify.dulac_orders)}, {"metric", c.certify.metric}, {"beta", c.certify.beta}};
    if (!c.certify.dulac_lower.empty()) cert.insert("dulac_lower", to_array(c.certify.dulac_lower));
    if (!c.certify.dulac_upper.empty()) cert.insert("dulac_upper", to_array(c.certify.dulac_upper));
    if (!c.certify.dulac_grid.empty()) cert.insert("dulac_grid", to_array(c.certify.dulac_grid));
    if (!c.certify.metric_rows.empty()) cert.insert("metric_rows", to_array(c.certify.metric_rows));
    if (!c.certify.steady_controls.empty()) cert.insert("steady_controls", to_array(c.certify.steady_controls));
    if (!c.certify.steady_guess.empty()) cert.insert("steady_guess", to_array(c.certify.steady_guess));
    if (!c.certify.delta.empty()) cert.insert("delta", to_array(c.certify.delta));
    if (!c.certify.contraction_grid.empty()) cert.insert("contraction_grid", to_array(c.certify.contraction_grid));
    root.insert("certify", cert);

    toml::table sim{{"periods", c.simulate.periods}, {"samples_per_segment", c.simulate.samples_per_segment}};
    if (!c.simulate.taus.empty()) sim.insert("taus", to_array(c.simulate.taus));
    if (!c.simulate.starts.empty()) sim.insert("starts", to_array(c.simulate.starts));
    root.insert("simulate", sim);

    const auto& s = c.solver;
    root.insert("solver", toml::table{{"tol_residual", s.tol_residual},
                                      {"max_iter", s.max_iter},
                                      {"fd_step_scale", s.fd_step_scale},
                                      {"damping", s.damping},
                                      {"armijo", s.armijo},
                                      {"max_backtracks", s.max_backtracks},
                                      {"max_condition", s.max_condition},
                                      {"step_tol", s.step_tol},
                                      {"converge_step", s.converge_step}});
    const auto& t = c.integrator;
    root.insert("integrator", toml::table{{"rtol", t.rtol},
                                          {"atol", t.atol},
                                          {"max_step", t.max_step},
                                          {"max_step_fraction", t.max_step_fraction},
                                          {"initial_step", t.initial_step},
                                          {"max_steps", t.max_steps}});
    root.insert("output", toml::table{{"dir", c.output.dir}, {"seed", std::int64_t(c.output.seed)}, {"threads", c.output.threads}});
    std::ostringstream os;
    os << root << '\n';
    return os.str();
}

namespace detail {

inline double take(std::map<std::string, double>& p, const char* key, double fallback)
{
    auto it = p.find(key);
    if (it == p.end()) return fallback;
    const double v = it->second;
    p.erase(it);
    return v;
}

inline void reject_leftovers(const std::map<std::string, double>& p, const std::map<std::string, Rows>& m, const std::string& model)
{
    if (!p.empty()) throw InvalidArgument("config: unknown parameter '" + p.begin()->first + "' for model " + model);
    if (!m.empty()) throw InvalidArgument("config: unknown matrix parameter '" + m.begin()->first + "' for model " + model);
}

/// Model file sections merged under the overrides given in the run configuration.
inline ModelSpec resolve_model(const ModelSpec& spec, const std::string& base_dir)
{
    const auto& names = builtin_model_names();
    if (std::find(names.begin(), names.end(), spec.model) != names.end()) return spec;
    std::filesystem::path p(spec.model);
    if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
    toml::table root;
    try {
        root = toml::parse_file(p.string());
    } catch (const toml::parse_error& e) {
        throw InvalidArgument("model file '" + p.string() + "': " + std::string(e.description()));
    }
    for (const auto& [k, v] : root) {
        const std::string key(k.str());
        if (key != "system" && key != "params" && key != "domain")
            throw InvalidArgument("model file: unknown key '" + key + "'");
    }
    ModelSpec file;
    read_model_sections(root, file);
    if (std::find(names.begin(), names.end(), file.model) == names.end())
        throw InvalidArgument("model file: [system] model must name a built-in model");
    for (const auto& [k, v] : spec.params) file.params[k] = v;
    for (const auto& [k, v] : spec.matrices) file.matrices[k] = v;
    if (!spec.domain_lower.empty()) file.domain_lower = spec.domain_lower;
    if (!spec.domain_upper.empty()) file.domain_upper = spec.domain_upper;
    return file;
}

} // namespace detail

inline Cstr2Params cstr2_params(std::map<std::string, double> p, const std::map<std::string, Rows>& m = {})
{
    Cstr2Params c;
    c.nbar = detail::take(p, "nbar", c.nbar);
    c.phi1 = detail::take(p, "phi1", c.phi1);
    c.phi2 = detail::take(p, "phi2", c.phi2);
    c.k1 = detail::take(p, "k1", c.k1);
    c.k2 = detail::take(p, "k2", c.k2);
    c.kappa = detail::take(p, "kappa", c.kappa);
    c.u1max = detail::take(p, "u1max", c.u1max);
    c.u2max = detail::take(p, "u2max", c.u2max);
    detail::reject_leftovers(p, m, "cstr2");
    return c;
}

inline Cstr3Params cstr3_params(std::map<std::string, double> p, const std::map<std::string, Rows>& m = {})
{
    Cstr3Params c;
    c.F = detail::take(p, "F", c.F);
    c.V = detail::take(p, "V", c.V);
    c.R = detail::take(p, "R", c.R);
    c.k10 = detail::take(p, "k10", c.k10);
    c.k20 = detail::take(p, "k20", c.k20);
    c.E1 = detail::take(p, "E1", c.E1);
    c.E2 = detail::take(p, "E2", c.E2);
    c.dH1 = detail::take(p, "dH1", c.dH1);
    c.dH2 = detail::take(p, "dH2", c.dH2);
    c.rhoCp = detail::take(p, "rhoCp", c.rhoCp);
    c.u1bar = detail::take(p, "u1bar", c.u1bar);
    c.u2bar = detail::take(p, "u2bar", c.u2bar);
    c.u1amp = detail::take(p, "u1amp", c.u1amp);
    c.u2amp = detail::take(p, "u2amp", c.u2amp);
    detail::reject_leftovers(p, m, "cstr3");
    return c;
}

/// The configured model with its parameter overrides and domain.
inline ControlAffineSystem build_system(const RunConfig& c)
{
    const ModelSpec spec = detail::resolve_model(c.system, c.base_dir);
    ControlAffineSystem s;
    if (spec.model == "cstr2") {
        s = build_cstr2(cstr2_params(spec.params, spec.matrices));
    } else if (spec.model == "cstr3") {
        s = build_cstr3(cstr3_params(spec.params, spec.matrices));
    } else if (spec.model == "harmonic") {
        auto p = spec.params;
        const double omega = detail::take(p, "omega", 1.0);
        detail::reject_leftovers(p, spec.matrices, "harmonic");
        s = harmonic_oscillator(omega);
    } else if (spec.model == "linear") {
        auto mats = spec.matrices;
        if (!mats.count("a") || !mats.count("b")) throw InvalidArgument("config: linear model needs matrix parameters a and b");
        const Mat a = to_mat(mats["a"], "params.a");
        const Mat b = to_mat(mats["b"], "params.b");
        mats.erase("a");
        mats.erase("b");
        Vec umin = Vec::Constant(b.cols(), -1.0), umax = Vec::Constant(b.cols(), 1.0);
        for (const char* key : {"umin", "umax"}) {
            auto it = mats.find(key);
            if (it == mats.end()) continue;
            if (it->second.size() != 1) throw InvalidArgument(std::string("config: ") + key + " must be [[...]]");
            (std::string(key) == "umin" ? umin : umax) = to_vec(it->second.front());
            mats.erase(it);
        }
        detail::reject_leftovers(spec.params, mats, "linear");
        s = synthetic_linear(a, b, umin, umax);
    } else {
        throw InvalidArgument("config: unknown model '" + spec.model + "'");
    }
    if (!spec.domain_lower.empty()) {
        if (int(spec.domain_lower.size()) != s.n()) throw DimensionError("config: domain.lower has wrong length");
        s.domain.lower = to_vec(spec.domain_lower);
    }
    if (!spec.domain_upper.empty()) {
        if (int(spec.domain_upper.size()) != s.n()) throw DimensionError("config: domain.upper has wrong length");
        s.domain.upper = to_vec(spec.domain_upper);
    }
    if (!spec.domain_lower.empty() || !spec.domain_upper.empty()) {
        s.drift = s.drift.with_domain(s.domain);
        s.validate();
    }
    return s;
}

/// The configured switching schedule for period `tau`.
inline SwitchingSchedule build_schedule(const RunConfig& c, const ControlAffineSystem& system, std::optional<double> tau = {})
{
    const double t = tau.value_or(c.controls.tau);
    if (c.controls.scenario == "symmetric-bang-bang") {
        if (!c.controls.breakpoints.empty() || !c.controls.values.empty())
            throw InvalidArgument("config: symmetric-bang-bang takes no breakpoints or values");
        return SwitchingSchedule::symmetric_bang_bang(system, t);
    }
    SwitchingSchedule s;
    s.tau = t;
    s.breakpoints = c.controls.breakpoints;
    s.controls.clear();
    for (const auto& v : c.controls.values) s.controls.push_back(to_vec(v));
    s.validate(system);
    return s;
}

/// Bundled configuration directory.
inline std::string bundled_config_dir()
{
#ifdef BCHD_ORBIT_CONFIG_DIR
    return BCHD_ORBIT_CONFIG_DIR;
#else
    return "configs";
#endif
}

inline RunConfig load_bundled_config(const std::string& name)
{
    return load_config((std::filesystem::path(bundled_config_dir()) / (name + ".toml")).string());
}

} // namespace bchd_orbit
