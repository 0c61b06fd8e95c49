#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "error.hpp"
#include "linalg.hpp"
#include "vector_field.hpp"

namespace bchd_orbit {

struct ControlInterval {
    double min = 0.0;
    double max = 0.0;
    bool operator==(const ControlInterval&) const = default;
};

/// x' = f0(x) + sum_j u_j g_j(x), u in a box U, x in a domain D.
struct ControlAffineSystem {
    std::string name;
    VectorField drift;
    std::vector<VectorField> inputs;
    std::vector<ControlInterval> control_box;
    Box domain;
    std::vector<std::string> state_labels;
    std::vector<std::string> state_units;
    std::vector<std::string> control_labels;
    std::vector<std::string> control_units;

    int n() const { return drift.dim(); }
    int m() const { return int(inputs.size()); }

    void validate() const
    {
        if (!drift) throw InvalidArgument("ControlAffineSystem: missing drift");
        if (control_box.size() != inputs.size())
            throw DimensionError("ControlAffineSystem: control box does not match the number of inputs");
        for (const auto& g : inputs)
            if (g.dim() != n()) throw DimensionError("ControlAffineSystem: input field dimension differs from drift");
        for (const auto& c : control_box)
            if (!(std::isfinite(c.min) && std::isfinite(c.max) && c.min <= c.max))
                throw InvalidArgument("ControlAffineSystem: control bounds must be finite with min <= max");
        if (domain.dim() != n()) throw DimensionError("ControlAffineSystem: domain box has wrong dimension");
    }

    bool constant_inputs() const
    {
        for (const auto& g : inputs)
            if (!g.is_constant()) return false;
        return true;
    }

    bool admissible(const Vec& u, double tol = 1e-12) const
    {
        if (u.size() != m()) return false;
        for (int j = 0; j < m(); ++j) {
            const double w = tol * std::max(1.0, std::abs(control_box[j].max - control_box[j].min));
            if (u(j) < control_box[j].min - w || u(j) > control_box[j].max + w) return false;
        }
        return true;
    }

    /// f0 + sum_j u_j g_j as a single field.
    VectorField frozen(const Vec& u, std::string label = {}) const
    {
        require_size(u, m(), "ControlAffineSystem::frozen");
        std::vector<VectorField> fields{drift};
        std::vector<double> coeffs{1.0};
        for (int j = 0; j < m(); ++j) {
            fields.push_back(inputs[j]);
            coeffs.push_back(u(j));
        }
        auto f = linear_combination(fields, coeffs, label.empty() ? name + ":frozen" : std::move(label));
        return f.with_domain(domain);
    }

    Vec rhs(const Vec& x, const Vec& u) const
    {
        require_size(u, m(), "ControlAffineSystem::rhs");
        Vec y = drift(x);
        for (int j = 0; j < m(); ++j) y += u(j) * inputs[j](x);
        return y;
    }

    /// d f(x,u) / dx
    Mat jacobian(const Vec& x, const Vec& u) const
    {
        Mat j = drift.jacobian(x);
        for (int k = 0; k < m(); ++k)
            if (!inputs[k].is_constant()) j += u(k) * inputs[k].jacobian(x);
        return j;
    }

    /// All 2^m vertices of the control box.
    std::vector<Vec> control_vertices() const
    {
        std::vector<Vec> out;
        const std::size_t count = std::size_t(1) << m();
        for (std::size_t mask = 0; mask < count; ++mask) {
            Vec u(m());
            for (int j = 0; j < m(); ++j) u(j) = (mask >> j) & 1u ? control_box[j].max : control_box[j].min;
            out.push_back(u);
        }
        return out;
    }

    Vec control_max() const
    {
        Vec u(m());
        for (int j = 0; j < m(); ++j) u(j) = control_box[j].max;
        return u;
    }

    Vec control_min() const
    {
        Vec u(m());
        for (int j = 0; j < m(); ++j) u(j) = control_box[j].min;
        return u;
    }
};

/// Piecewise-constant control on [0, tau]: u = controls[k-1] on [a_{k-1} tau, a_k tau).
struct SwitchingSchedule {
    double tau = 1.0;
    std::vector<double> breakpoints{0.0, 1.0};
    std::vector<Vec> controls;

    int segments() const { return int(controls.size()); }

    void validate() const
    {
        if (!(tau > 0.0) || !std::isfinite(tau)) throw InvalidArgument("SwitchingSchedule: tau must be positive and finite");
        if (breakpoints.size() < 2 || breakpoints.size() != controls.size() + 1)
            throw InvalidArgument("SwitchingSchedule: need N+1 breakpoints for N control values");
        if (breakpoints.front() != 0.0 || breakpoints.back() != 1.0)
            throw InvalidArgument("SwitchingSchedule: breakpoints must start at 0 and end at 1");
        for (std::size_t k = 1; k < breakpoints.size(); ++k)
            if (!(breakpoints[k] > breakpoints[k - 1]))
                throw InvalidArgument("SwitchingSchedule: breakpoints must be strictly increasing");
    }

    void validate(const ControlAffineSystem& system) const
    {
        validate();
        for (const auto& u : controls) {
            if (u.size() != system.m()) throw DimensionError("SwitchingSchedule: control value has wrong length");
            if (!system.admissible(u)) throw InvalidArgument("SwitchingSchedule: control value outside the control box");
        }
    }

    /// Interval fractions a_k - a_{k-1}.
    std::vector<double> fractions() const
    {
        std::vector<double> f;
        for (std::size_t k = 1; k < breakpoints.size(); ++k) f.push_back(breakpoints[k] - breakpoints[k - 1]);
        return f;
    }

    double segment_start(int k) const { return breakpoints[k] * tau; }
    double segment_end(int k) const { return breakpoints[k + 1] * tau; }

    SwitchingSchedule with_tau(double new_tau) const
    {
        SwitchingSchedule s = *this;
        s.tau = new_tau;
        return s;
    }

    /// a = (1/2, 1/2), first half at u_max, second half at u_min.
    static SwitchingSchedule symmetric_bang_bang(const ControlAffineSystem& system, double tau)
    {
        SwitchingSchedule s;
        s.tau = tau;
        s.breakpoints = {0.0, 0.5, 1.0};
        s.controls = {system.control_max(), system.control_min()};
        s.validate(system);
        return s;
    }
};

/// Frozen fields f_k = f0 + sum_j u^(k)_j g_j for each segment.
inline std::vector<VectorField> segment_fields(const ControlAffineSystem& system, const SwitchingSchedule& schedule)
{
    std::vector<VectorField> out;
    for (int k = 0; k < schedule.segments(); ++k)
        out.push_back(system.frozen(schedule.controls[k], "f" + std::to_string(k + 1)));
    return out;
}

} // namespace bchd_orbit
