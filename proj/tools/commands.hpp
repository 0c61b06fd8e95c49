#pragma once

// Pipeline commands behind the command-line verbs.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <spdlog/spdlog.h>

#include "bchd_orbit.hpp"

namespace bchd_orbit::cli {

enum ExitCode : int { kOk = 0, kFailure = 1, kCertificateInvalid = 2 };

inline int combine(int a, int b)
{
    if (a == kFailure || b == kFailure) return kFailure;
    return std::max(a, b);
}

struct Context {
    RunConfig cfg;
    std::filesystem::path out;
    int threads = 0;
    std::optional<int> order;
    std::optional<std::string> method;
};

inline void write_file(const std::filesystem::path& path, const std::string& text)
{
    std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot write '" + path.string() + "'");
    f << text;
    if (!f) throw Error("write failed for '" + path.string() + "'");
    spdlog::debug("wrote {}", path.string());
}

inline std::string tau_tag(double tau) { return "tau" + format_double(tau); }

inline std::vector<int> chain_orders(const Context& ctx)
{
    if (!ctx.order) return ctx.cfg.pipeline.orders;
    if (*ctx.order < 1) throw InvalidArgument("--order must be >= 1");
    std::vector<int> o;
    for (int m = 1; m <= *ctx.order; ++m) o.push_back(m);
    return o;
}

inline std::optional<SeriesMethod> method_of(const Context& ctx)
{
    const std::string m = ctx.method.value_or(ctx.cfg.pipeline.method);
    if (m == "auto") return std::nullopt;
    return parse_series_method(m);
}

inline Vec initial_guess(const ControlAffineSystem& sys, const Row& configured)
{
    if (!configured.empty()) {
        if (int(configured.size()) != sys.n()) throw DimensionError("pipeline.guess has wrong length");
        return to_vec(configured);
    }
    const Vec zero = Vec::Zero(sys.n());
    if (!sys.domain.contains(zero)) throw InvalidArgument("pipeline.guess is required: the origin is outside the domain");
    return zero;
}

/// Chain of truncated equilibria followed by a shooting solve; returns the reports in order.
inline std::vector<EquilibriumReport> solve_orbit(const Context& ctx, const ControlAffineSystem& sys, const SwitchingSchedule& sched,
                                                  bool chain, bool shooting)
{
    const auto& c = ctx.cfg;
    std::vector<EquilibriumReport> reps;
    Vec x = initial_guess(sys, c.pipeline.guess);
    if (chain) {
        ChainOptions opts;
        opts.method = method_of(ctx);
        opts.cap = c.pipeline.order_cap;
        reps = refine_chain(sys, sched, chain_orders(ctx), x, c.solver, opts);
        for (auto it = reps.rbegin(); it != reps.rend(); ++it)
            if (it->converged) {
                x = it->x_star;
                break;
            }
    }
    if (shooting) {
        if (!c.pipeline.shooting_guess.empty()) x = to_vec(c.pipeline.shooting_guess);
        reps.push_back(solve_shooting(sys, sched, x, c.solver, c.integrator));
    }
    return reps;
}

inline int cmd_series(const Context& ctx)
{
    const auto sys = build_system(ctx.cfg);
    const auto sched = build_schedule(ctx.cfg, sys);
    const int n_gen = sched.segments();
    const auto orders = chain_orders(ctx);
    const int order = ctx.order.value_or(*std::max_element(orders.begin(), orders.end()));
    const auto method = method_of(ctx).value_or(default_series_method(n_gen, order));
    const auto series = build_series(method, n_gen, order, ctx.cfg.pipeline.order_cap);
    const std::string stem = "series_N" + std::to_string(n_gen) + "_M" + std::to_string(order) + "_" + to_string(method);
    write_file(ctx.out / (stem + ".txt"), series.dump());
    const auto canon = series.canonical();
    write_file(ctx.out / (stem + "_canonical.txt"), canon.dump());
    std::ostringstream info;
    info << "generators=" << n_gen << "\norder=" << order << "\nmethod=" << to_string(method) << "\nterms=" << series.size()
         << "\nchecksum=" << series.checksum() << "\ncanonical_terms=" << canon.size() << "\ncanonical_checksum=" << canon.checksum()
         << '\n';
    write_file(ctx.out / (stem + "_info.txt"), info.str());
    spdlog::info("series N={} M={} method={}: {} terms, checksum {}, canonical checksum {}", n_gen, order, to_string(method),
                 series.size(), series.checksum(), canon.checksum());
    return kOk;
}

inline int cmd_find(const Context& ctx)
{
    const auto& c = ctx.cfg;
    const auto sys = build_system(c);
    const auto sched = build_schedule(c, sys);
    const bool chain = c.has_stage("chain"), shooting = c.has_stage("shooting");
    if (!chain && !shooting) {
        spdlog::warn("find: pipeline has neither 'chain' nor 'shooting'; nothing to do");
        return kOk;
    }
    const auto reps = solve_orbit(ctx, sys, sched, chain, shooting);
    std::string csv = EquilibriumReport::csv_header(sys.n()) + '\n', text;
    int code = kOk;
    for (const auto& r : reps) {
        csv += r.csv_row() + '\n';
        text += r.to_text() + '\n';
        if (r.converged) {
            spdlog::info("{} ({}): x* = {} after {} iterations, residual {}", r.label, r.kind, format_vector(r.x_star), r.iterations,
                         format_double(r.residual_norm));
        } else {
            spdlog::error("{} ({}) did not converge: {}", r.label, r.kind, r.message);
            code = kFailure;
        }
    }
    write_file(ctx.out / "equilibria.csv", csv);
    write_file(ctx.out / "equilibria.txt", text);
    if (shooting && reps.back().converged) {
        const Vec x = reps.back().x_star;
        const double res = (compose_flows(sys, sched, x, c.integrator) - x).norm();
        write_file(ctx.out / "periodicity.txt", "x0=" + format_vector(x) + "\nperiodicity_residual=" + format_double(res) + '\n');
        spdlog::info("periodicity residual {}", format_double(res));
    }
    return code;
}

/// Contraction metric from the configuration: explicit rows or the Lyapunov solution at the steady state.
struct MetricSetup {
    Mat metric;
    EquilibriumReport steady;
};

inline MetricSetup metric_setup(const Context& ctx, const ControlAffineSystem& sys)
{
    const auto& cc = ctx.cfg.certify;
    Vec u(sys.m());
    if (!cc.steady_controls.empty()) {
        u = to_vec(cc.steady_controls);
    } else {
        for (int j = 0; j < sys.m(); ++j) u(j) = 0.5 * (sys.control_box[std::size_t(j)].min + sys.control_box[std::size_t(j)].max);
    }
    const Vec guess = initial_guess(sys, cc.steady_guess.empty() ? ctx.cfg.pipeline.guess : cc.steady_guess);
    MetricSetup s;
    s.steady = steady_state(sys, u, guess, ctx.cfg.solver);
    if (!s.steady.converged) throw Error("steady state did not converge: " + s.steady.message);
    if (cc.metric == "explicit") {
        s.metric = to_mat(cc.metric_rows, "certify.metric_rows");
    } else {
        s.metric = solve_lyapunov(sys.drift.jacobian(s.steady.x_star), Mat::Identity(sys.n(), sys.n()));
    }
    return s;
}

inline int cmd_certify(const Context& ctx)
{
    const auto& c = ctx.cfg;
    const auto sys = build_system(c);
    const auto sched = build_schedule(c, sys);
    const int threads = ctx.threads;
    int code = kOk;
    bool ran = false;
    if (c.has_stage("dulac")) {
        ran = true;
        if (sys.n() != 2) {
            spdlog::warn("certify: divergence scan skipped; it applies to planar systems only");
        } else {
            if (c.certify.dulac_lower.empty() || c.certify.dulac_upper.empty() || c.certify.dulac_grid.empty())
                throw InvalidArgument("certify: dulac_lower, dulac_upper and dulac_grid are required");
            const BoxRegion region{to_vec(c.certify.dulac_lower), to_vec(c.certify.dulac_upper), c.certify.dulac_grid};
            region.validate();
            std::string csv = DulacReport::csv_header() + '\n';
            for (int m : c.certify.dulac_orders) {
                const auto f = truncated_field(sys, sched, m, method_of(ctx), c.pipeline.order_cap);
                DulacOptions o;
                o.threads = threads;
                o.keep_samples = true;
                const auto rep = dulac_scan(f, region, o);
                const std::string stem = "dulac_M" + std::to_string(m);
                write_file(ctx.out / (stem + ".txt"), rep.to_text());
                write_file(ctx.out / (stem + "_samples.csv"), rep.samples_csv());
                csv += rep.csv_row() + '\n';
                spdlog::info("divergence scan M={}: {} (min |div| {}, {} failures)", m, rep.status(),
                             format_double(rep.min_abs_divergence), rep.domain_failures);
                if (!rep.sign_uniform) code = combine(code, kCertificateInvalid);
            }
            write_file(ctx.out / "dulac.csv", csv);
        }
    }
    if (c.has_stage("contraction")) {
        ran = true;
        if (c.certify.delta.empty() || c.certify.contraction_grid.empty())
            throw InvalidArgument("certify: delta and contraction_grid are required");
        const auto ms = metric_setup(ctx, sys);
        const Mat a = sys.drift.jacobian(ms.steady.x_star);
        std::ostringstream mt;
        mt << "steady_state=" << format_vector(ms.steady.x_star) << "\nmetric_source=" << c.certify.metric
           << "\nmetric_M=" << format_matrix(ms.metric) << "\nlyapunov_residual=" << format_double(lyapunov_residual(a, Mat::Identity(sys.n(), sys.n()), ms.metric))
           << "\nhurwitz=" << (is_hurwitz(a) ? "true" : "false") << '\n';
        if (c.certify.metric == "explicit" && is_hurwitz(a)) {
            const Mat m = solve_lyapunov(a, Mat::Identity(sys.n(), sys.n()));
            mt << "lyapunov_M=" << format_matrix(m) << '\n';
        }
        write_file(ctx.out / "metric.txt", mt.str());
        write_file(ctx.out / "steady.txt", ms.steady.to_text());
        const auto region = BoxRegion::around(ms.steady.x_star, to_vec(c.certify.delta), c.certify.contraction_grid);
        ContractionOptions o;
        o.threads = threads;
        o.keep_samples = true;
        const auto cert = contraction_check(sys, ms.metric, c.certify.beta, region, o);
        write_file(ctx.out / "contraction.txt", cert.to_text());
        write_file(ctx.out / "contraction.csv", ContractionCertificate::csv_header() + '\n' + cert.csv_row() + '\n');
        write_file(ctx.out / "contraction_samples.csv", cert.samples_csv());
        if (cert.valid()) {
            spdlog::info("contraction certificate valid (worst eigenvalue {})", format_double(cert.worst_eigenvalue));
        } else {
            spdlog::warn("contraction certificate invalid: worst eigenvalue {} at {}; largest certifiable beta {}",
                         format_double(cert.worst_eigenvalue), format_vector(cert.worst_point), format_double(cert.max_beta()));
            code = combine(code, kCertificateInvalid);
        }
    }
    if (!ran) spdlog::warn("certify: pipeline has neither 'dulac' nor 'contraction'; nothing to do");
    return code;
}

inline int cmd_simulate(const Context& ctx)
{
    const auto& c = ctx.cfg;
    const auto sys = build_system(c);
    int code = kOk;
    const int n = sys.n();
    if (c.has_stage("simulate")) {
        const Row taus = c.simulate.taus.empty() ? Row{c.controls.tau} : c.simulate.taus;
        std::string poincare = "tau,start,period";
        for (int i = 0; i < n; ++i) poincare += ",x" + std::to_string(i + 1);
        poincare += '\n';
        std::string orbits = "tau," + std::string("converged");
        for (int i = 0; i < n; ++i) orbits += ",x" + std::to_string(i + 1);
        orbits += ",periodicity_residual\n";
        for (double tau : taus) {
            const auto sched = build_schedule(c, sys, tau);
            std::vector<Vec> starts;
            if (c.simulate.starts.empty()) {
                auto reps = solve_orbit(ctx, sys, sched, true, true);
                const auto& shoot = reps.back();
                if (!shoot.converged) {
                    spdlog::error("simulate {}: shooting did not converge: {}", tau_tag(tau), shoot.message);
                    code = kFailure;
                    continue;
                }
                const double res = (compose_flows(sys, sched, shoot.x_star, c.integrator) - shoot.x_star).norm();
                orbits += format_double(tau) + ",true," + format_vector(shoot.x_star) + ',' + format_double(res) + '\n';
                starts.push_back(shoot.x_star);
            } else {
                for (const auto& s : c.simulate.starts) {
                    if (int(s.size()) != n) throw DimensionError("simulate.starts entry has wrong length");
                    starts.push_back(to_vec(s));
                }
            }
            for (std::size_t k = 0; k < starts.size(); ++k) {
                try {
                    const auto tr = simulate_periods(sys, sched, starts[k], c.simulate.periods, c.integrator,
                                                     c.simulate.samples_per_segment, false);
                    write_file(ctx.out / ("trajectory_" + tau_tag(tau) + "_s" + std::to_string(k + 1) + ".csv"), tr.to_csv());
                    const auto ps = tr.poincare_samples();
                    for (std::size_t p = 0; p < ps.size(); ++p)
                        poincare += format_double(tau) + ',' + std::to_string(k + 1) + ',' + std::to_string(p) + ',' +
                                    format_vector(ps[p]) + '\n';
                    spdlog::info("simulate {} start {}: {} samples, final state {}", tau_tag(tau), k + 1, tr.size(),
                                 format_vector(tr.final_state()));
                } catch (const IntegrationError& e) {
                    spdlog::error("simulate {} start {}: {} (t = {}, x = {})", tau_tag(tau), k + 1, e.what(),
                                  format_double(e.last_time()), format_vector(e.last_state()));
                    code = kFailure;
                }
            }
        }
        write_file(ctx.out / "poincare.csv", poincare);
        if (c.simulate.starts.empty()) write_file(ctx.out / "orbits.csv", orbits);
    }
    if (c.has_stage("attractivity")) {
        const auto sched = build_schedule(c, sys);
        const auto reps = solve_orbit(ctx, sys, sched, c.has_stage("chain"), true);
        const auto& shoot = reps.back();
        if (!shoot.converged) {
            spdlog::error("attractivity: shooting did not converge: {}", shoot.message);
            return kFailure;
        }
        std::optional<Mat> metric;
        if (c.certify.metric == "explicit" && !c.certify.metric_rows.empty()) {
            metric = to_mat(c.certify.metric_rows, "certify.metric_rows");
        } else if (c.certify.metric == "lyapunov") {
            try {
                metric = metric_setup(ctx, sys).metric;
            } catch (const Error& e) {
                spdlog::warn("attractivity: no metric ({}); reporting Euclidean distances only", e.what());
            }
        }
        std::vector<Vec> starts;
        for (const auto& s : c.simulate.starts) starts.push_back(to_vec(s));
        if (starts.empty()) starts.push_back(shoot.x_star);
        const auto traces = attractivity_probe(sys, sched, shoot.x_star, starts, c.simulate.periods, metric, c.integrator);
        write_file(ctx.out / "attractivity.csv", attractivity_csv(traces));
        for (std::size_t k = 0; k < traces.size(); ++k)
            spdlog::info("attractivity start {}: distance {} -> {} over {} periods", k + 1, format_double(traces[k].distances.front()),
                         format_double(traces[k].distances.back()), c.simulate.periods);
    }
    return code;
}

inline int run_all(const Context& ctx)
{
    int code = kOk;
    if (ctx.cfg.has_stage("series")) code = combine(code, cmd_series(ctx));
    code = combine(code, cmd_find(ctx));
    code = combine(code, cmd_certify(ctx));
    code = combine(code, cmd_simulate(ctx));
    return code;
}

/// Full case-study pipeline for every bundled configuration, one output subdirectory each.
inline int cmd_reproduce(const Context& base, const std::vector<std::string>& names)
{
    int code = kOk;
    std::string summary;
    for (const auto& name : names) {
        Context ctx = base;
        ctx.cfg = load_bundled_config(name);
        ctx.out = base.out / name;
        spdlog::info("reproduce: {} -> {}", name, ctx.out.string());
        int c = kOk;
        try {
            c = run_all(ctx);
        } catch (const std::exception& e) {
            spdlog::error("reproduce {}: {}", name, e.what());
            c = kFailure;
        }
        summary += name + "=" + std::to_string(c) + '\n';
        code = combine(code, c);
    }
    write_file(base.out / "summary.txt", summary);
    return code;
}

} // namespace bchd_orbit::cli
