#pragma once

// Damped Newton solvers for F(x) = 0 and for the periodicity condition P(x) = x.

#include <complex>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/LU>

#include "bchd.hpp"
#include "error.hpp"
#include "flow.hpp"
#include "io.hpp"
#include "linalg.hpp"
#include "system.hpp"
#include "vector_field.hpp"

namespace bchd_orbit {

struct SolverConfig {
    double tol_residual = 1e-10;
    int max_iter = 50;
    /// Central-difference step per coordinate: fd_step_scale * max(1, |x_i|).
    double fd_step_scale = 1e-6;
    /// Backtracking factor for the line search and domain pull-back.
    double damping = 0.5;
    double armijo = 1e-4;
    int max_backtracks = 40;
    double max_condition = 1e12;
    /// Stop when the Newton step is below step_tol * (1 + |x|).
    double step_tol = 1e-15;
    /// Equilibria also require a final Newton step below converge_step * (1 + |x|); 0 disables.
    double converge_step = 1e-12;

    void validate() const
    {
        if (!(tol_residual > 0.0)) throw InvalidArgument("SolverConfig: tol_residual must be positive");
        if (max_iter < 1) throw InvalidArgument("SolverConfig: max_iter must be >= 1");
        if (!(fd_step_scale > 0.0)) throw InvalidArgument("SolverConfig: fd_step_scale must be positive");
        if (!(damping > 0.0 && damping < 1.0)) throw InvalidArgument("SolverConfig: damping must lie in (0, 1)");
        if (converge_step < 0.0) throw InvalidArgument("SolverConfig: converge_step must be non-negative");
    }

    bool operator==(const SolverConfig&) const = default;
};

struct EquilibriumReport {
    std::string label;
    /// "equilibrium" (zero of F) or "shooting" (fixed point of the period map).
    std::string kind = "equilibrium";
    Vec x_star;
    double residual_norm = 0.0;
    int iterations = 0;
    /// Eigenvalues of dF/dx (equilibrium) or of the monodromy matrix (shooting).
    std::vector<std::complex<double>> jacobian_eigenvalues;
    bool converged = false;
    std::string message;

    std::string to_text() const
    {
        std::ostringstream os;
        os << "label=" << label << '\n'
           << "kind=" << kind << '\n'
           << "converged=" << (converged ? "true" : "false") << '\n'
           << "iterations=" << iterations << '\n'
           << "residual_norm=" << format_double(residual_norm) << '\n'
           << "x_star=" << format_vector(x_star) << '\n'
           << "eigenvalues=" << format_complex_list(jacobian_eigenvalues) << '\n'
           << "message=" << message << '\n';
        return os.str();
    }

    static std::string csv_header(int n)
    {
        std::string h = "label,kind,converged,iterations,residual_norm";
        for (int i = 0; i < n; ++i) h += ",x" + std::to_string(i + 1);
        return h + ",eigenvalues,message";
    }

    std::string csv_row() const
    {
        std::ostringstream os;
        os << csv_field(label) << ',' << kind << ',' << (converged ? "true" : "false") << ',' << iterations << ','
           << format_double(residual_norm) << ',' << format_vector(x_star) << ',' << csv_field(format_complex_list(jacobian_eigenvalues))
           << ',' << csv_field(message);
        return os.str();
    }
};

namespace detail {

struct NewtonProblem {
    int n;
    std::function<Vec(const Vec&)> residual;
    std::function<Mat(const Vec&)> jacobian;
    std::function<bool(const Vec&)> in_domain;
};

inline std::optional<Vec> try_residual(const NewtonProblem& p, const Vec& x)
{
    if (!p.in_domain(x)) return std::nullopt;
    try {
        Vec r = p.residual(x);
        if (!r.allFinite()) return std::nullopt;
        return r;
    } catch (const DomainError&) {
        return std::nullopt;
    } catch (const IntegrationError&) {
        return std::nullopt;
    }
}

inline EquilibriumReport newton(const NewtonProblem& p, const Vec& guess, const SolverConfig& cfg, bool check_step)
{
    cfg.validate();
    require_size(guess, p.n, "newton");
    EquilibriumReport rep;
    rep.x_star = guess;
    auto r0 = try_residual(p, guess);
    if (!r0) throw DomainError("newton: initial guess outside the domain");
    Vec x = guess;
    Vec r = *r0;
    double norm = r.norm();
    rep.residual_norm = norm;
    for (int it = 0;; ++it) {
        rep.iterations = it;
        rep.x_star = x;
        rep.residual_norm = norm;
        if (norm <= cfg.tol_residual) {
            rep.converged = true;
            rep.message = "residual below tolerance";
            if (!check_step || cfg.converge_step <= 0.0 || it >= cfg.max_iter) return rep;
            const Mat j = p.jacobian(x);
            if (!j.allFinite() || !(condition_number(j) <= cfg.max_condition)) return rep;
            const Vec dx = j.partialPivLu().solve(-r);
            if (dx.norm() <= cfg.converge_step * (1.0 + x.norm())) return rep;
            auto rt = try_residual(p, x + dx);
            if (!rt || rt->norm() > cfg.tol_residual) return rep;
            x += dx;
            r = *rt;
            norm = rt->norm();
            rep.converged = false;
            continue;
        }
        if (it >= cfg.max_iter) {
            rep.message = "maximum iterations reached";
            return rep;
        }
        const Mat j = p.jacobian(x);
        if (!j.allFinite()) {
            rep.message = "non-finite Jacobian";
            return rep;
        }
        const double cond = condition_number(j);
        if (!(cond <= cfg.max_condition)) {
            rep.message = "singular Jacobian (condition number " + format_double(cond) + ")";
            return rep;
        }
        const Vec dx = j.partialPivLu().solve(-r);
        if (dx.norm() <= cfg.step_tol * (1.0 + x.norm())) {
            rep.message = "step below tolerance; residual floor reached";
            return rep;
        }
        double lambda = 1.0;
        bool accepted = false;
        for (int b = 0; b <= cfg.max_backtracks; ++b, lambda *= cfg.damping) {
            const Vec xt = x + lambda * dx;
            auto rt = try_residual(p, xt);
            if (!rt) continue;
            const double nt = rt->norm();
            if (nt * nt <= (1.0 - 2.0 * cfg.armijo * lambda) * norm * norm) {
                x = xt;
                r = *rt;
                norm = nt;
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            rep.iterations = it + 1;
            rep.message = "line search failed";
            return rep;
        }
    }
}

} // namespace detail

/// Damped Newton on F(x) = 0 with the jet Jacobian of F.
inline EquilibriumReport find_equilibrium(const VectorField& field, const Vec& guess, const SolverConfig& cfg = {})
{
    require_size(guess, field.dim(), "find_equilibrium");
    if (!field.in_domain(guess)) throw DomainError("find_equilibrium: initial guess outside the domain");
    detail::NewtonProblem p{
        field.dim(),
        [&](const Vec& x) { return field(x); },
        [&](const Vec& x) { return field.jacobian(x); },
        [&](const Vec& x) { return field.in_domain(x); },
    };
    auto rep = detail::newton(p, guess, cfg, true);
    rep.label = field.name();
    rep.kind = "equilibrium";
    try {
        rep.jacobian_eigenvalues = eigenvalues(field.jacobian(rep.x_star));
    } catch (const DomainError&) {
    }
    return rep;
}

/// Zero of the frozen field f0 + sum u_j g_j for a constant admissible control.
inline EquilibriumReport steady_state(const ControlAffineSystem& system, const Vec& u, const Vec& guess, const SolverConfig& cfg = {})
{
    if (!system.admissible(u)) throw InvalidArgument("steady_state: control outside the control box");
    auto rep = find_equilibrium(system.frozen(u, "steady"), guess, cfg);
    rep.label = "steady";
    return rep;
}

/// d P / d x by central differences, step fd_step_scale * max(1, |x_i|).
inline Mat poincare_jacobian(const PoincareMap& map, const Vec& x, double fd_step_scale)
{
    const int n = int(x.size());
    Mat j(n, n);
    for (int i = 0; i < n; ++i) {
        const double h = fd_step_scale * std::max(1.0, std::abs(x(i)));
        Vec xp = x, xm = x;
        xp(i) += h;
        xm(i) -= h;
        j.col(i) = (map(xp) - map(xm)) / (2.0 * h);
    }
    return j;
}

/// Damped Newton on G(x) = P(x) - x, where P is the period map of the switched system.
inline EquilibriumReport solve_shooting(const ControlAffineSystem& system, const SwitchingSchedule& schedule, const Vec& guess,
                                        const SolverConfig& cfg = {}, const ToleranceConfig& tol = {})
{
    const PoincareMap map(system, schedule, tol);
    require_size(guess, system.n(), "solve_shooting");
    if (!system.domain.contains(guess)) throw DomainError("solve_shooting: initial guess outside the domain");
    const int n = system.n();
    detail::NewtonProblem p{
        n,
        [&](const Vec& x) { return Vec(map(x) - x); },
        [&](const Vec& x) { return Mat(poincare_jacobian(map, x, cfg.fd_step_scale) - Mat::Identity(n, n)); },
        [&](const Vec& x) { return system.domain.contains(x); },
    };
    auto rep = detail::newton(p, guess, cfg, false);
    rep.label = "shooting";
    rep.kind = "shooting";
    try {
        rep.jacobian_eigenvalues = eigenvalues(poincare_jacobian(map, rep.x_star, cfg.fd_step_scale));
    } catch (const IntegrationError&) {
    } catch (const DomainError&) {
    }
    return rep;
}

/// Truncated series F~_M bound to the frozen fields of the schedule.
inline VectorField truncated_field(const ControlAffineSystem& system, const SwitchingSchedule& schedule, int order,
                                   std::optional<SeriesMethod> method = std::nullopt, int cap = kDefaultOrderCap)
{
    schedule.validate(system);
    const int n_gen = schedule.segments();
    const auto m = method.value_or(default_series_method(n_gen, order));
    const auto series = build_series(m, n_gen, order, cap);
    return bind_series(series, segment_fields(system, schedule), schedule.fractions(), schedule.tau, "F~" + std::to_string(order));
}

struct ChainOptions {
    std::optional<SeriesMethod> method;
    int cap = kDefaultOrderCap;
    /// Append a shooting solve started from the last equilibrium.
    bool polish = false;
    ToleranceConfig tolerances;
    SolverConfig polish_config;
};

/// Equilibria of F~_M for each M in `orders`, each stage warm-started from the previous one.
inline std::vector<EquilibriumReport> refine_chain(const ControlAffineSystem& system, const SwitchingSchedule& schedule,
                                                   const std::vector<int>& orders, const Vec& guess, const SolverConfig& cfg = {},
                                                   const ChainOptions& opts = {})
{
    if (orders.empty()) throw InvalidArgument("refine_chain: orders must be non-empty");
    std::vector<EquilibriumReport> out;
    Vec x = guess;
    for (int m : orders) {
        const auto field = truncated_field(system, schedule, m, opts.method, opts.cap);
        auto rep = find_equilibrium(field, x, cfg);
        if (rep.converged) x = rep.x_star;
        out.push_back(std::move(rep));
    }
    if (opts.polish) out.push_back(solve_shooting(system, schedule, x, opts.polish_config, opts.tolerances));
    return out;
}

} // namespace bchd_orbit
