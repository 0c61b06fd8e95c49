#pragma once

// Built-in control-affine models: the two CSTR reactors and linear test systems.

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "error.hpp"
#include "linalg.hpp"
#include "system.hpp"
#include "units.hpp"
#include "vector_field.hpp"

namespace bchd_orbit {

/// Dimensionless first-order nonisothermal reaction A -> product (deviation variables).
struct Cstr2Params {
    double nbar = 1.0;
    double phi1 = 1.0;
    double phi2 = 1.0;
    double k1 = 5.819e7;
    double k2 = -8.99e5;
    double kappa = 17.77;
    double u1max = 1.798;
    double u2max = 0.06663;

    void validate() const
    {
        for (double v : {nbar, phi1, phi2, k1, k2, kappa, u1max, u2max})
            if (!std::isfinite(v)) throw InvalidArgument("Cstr2Params: parameters must be finite");
        if (!(kappa > 0.0)) throw InvalidArgument("Cstr2Params: kappa must be positive");
        if (u1max < 0.0 || u2max < 0.0) throw InvalidArgument("Cstr2Params: control bounds must be non-negative");
    }
};

/// f0_i = -phi_i x_i + k_i e^{-kappa} - k_i (x1+1)^nbar e^{-kappa/(x2+1)}
///      = -phi_i x_i - k_i e^{-kappa} expm1(nbar log1p(x1) + kappa x2/(x2+1))
template <class T>
std::vector<T> cstr2_drift(const std::vector<T>& x, const Cstr2Params& p)
{
    using std::expm1;
    using std::log1p;
    const double scale = std::exp(-p.kappa);
    const T rate = expm1(p.nbar * log1p(x[0]) + p.kappa * x[1] / (x[1] + 1.0));
    return {-p.phi1 * x[0] - p.k1 * scale * rate, -p.phi2 * x[1] - p.k2 * scale * rate};
}

inline ControlAffineSystem build_cstr2(const Cstr2Params& p = {})
{
    p.validate();
    const double inf = std::numeric_limits<double>::infinity();
    Box domain{Vec::Constant(2, -1.0), Vec::Constant(2, inf)};
    ControlAffineSystem s;
    s.name = "cstr2";
    s.drift = make_field(2, [p](const auto& x) { return cstr2_drift(x, p); }, "f0", domain);
    s.inputs = {constant_field((Vec(2) << 1.0, 0.0).finished(), "g1"), constant_field((Vec(2) << 0.0, 1.0).finished(), "g2")};
    s.control_box = {{-p.u1max, p.u1max}, {-p.u2max, p.u2max}};
    s.domain = domain;
    s.state_labels = {"x1", "x2"};
    s.state_units = {"1", "1"};
    s.control_labels = {"u1", "u2"};
    s.control_units = {"1", "1"};
    s.validate();
    return s;
}

/// Nonisothermal series reaction A -> B -> product in an adiabatic CSTR.
/// Units: L, min, mol, K, J.
struct Cstr3Params {
    double F = 100.0;
    double V = 100.0;
    double R = 8.314;
    double k10 = 7.2e10;
    double k20 = 1.0e10;
    double E1 = 7.275e4;
    double E2 = 8.0e4;
    double dH1 = -5.0e4;
    double dH2 = -7.0e4;
    double rhoCp = 4.2e3;
    double u1bar = 1.0;
    double u2bar = 350.0;
    double u1amp = 0.5;
    double u2amp = 50.0;

    void validate() const
    {
        for (double v : {F, V, R, k10, k20, E1, E2, dH1, dH2, rhoCp, u1bar, u2bar, u1amp, u2amp})
            if (!std::isfinite(v)) throw InvalidArgument("Cstr3Params: parameters must be finite");
        for (double v : {F, V, R, k10, k20, E1, E2, rhoCp})
            if (!(v > 0.0)) throw InvalidArgument("Cstr3Params: F, V, R, k0, E and rhoCp must be positive");
        if (u1amp < 0.0 || u2amp < 0.0) throw InvalidArgument("Cstr3Params: modulation amplitudes must be non-negative");
    }

    Vec steady_controls() const { return (Vec(2) << u1bar, u2bar).finished(); }
};

namespace detail {

template <class P>
struct Cstr3Coeffs {
    P F, V, R, k10, k20, E1, E2, dH1, dH2, rhoCp;
};

template <class T, class P>
std::vector<T> cstr3_drift(const std::vector<T>& x, const Cstr3Coeffs<P>& c)
{
    using std::exp;
    const auto d = c.F / c.V;
    const T r1 = c.k10 * exp(-c.E1 / (c.R * x[2]));
    const T r2 = c.k20 * exp(-c.E2 / (c.R * x[2]));
    return {
        -((d + r1) * x[0]),
        -((d + r2) * x[1] - r1 * x[0]),
        -(d * x[2] + c.dH1 * r1 * x[0] / c.rhoCp + c.dH2 * r2 * x[1] / c.rhoCp),
    };
}

inline Cstr3Coeffs<double> plain_coeffs(const Cstr3Params& p)
{
    return {p.F, p.V, p.R, p.k10, p.k20, p.E1, p.E2, p.dH1, p.dH2, p.rhoCp};
}

} // namespace detail

/// Evaluates the drift with unit-tagged quantities and returns the unit of each component.
/// Throws DimensionError on any inconsistent sum or dimensioned exponent.
inline std::vector<std::string> cstr3_audit_units(const Cstr3Params& p)
{
    using namespace units;
    using Q = Quantity;
    const Dimension per_min = dimensionless / minute;
    const Dimension conc = mol / litre;
    detail::Cstr3Coeffs<Q> c{
        Q(p.F, litre / minute),
        Q(p.V, litre),
        Q(p.R, joule / (mol * kelvin)),
        Q(p.k10, per_min),
        Q(p.k20, per_min),
        Q(p.E1, joule / mol),
        Q(p.E2, joule / mol),
        Q(p.dH1, joule / mol),
        Q(p.dH2, joule / mol),
        Q(p.rhoCp, joule / (litre * kelvin)),
    };
    const std::vector<Q> x{Q(0.37, conc), Q(0.62, conc), Q(357.7, kelvin)};
    const auto y = detail::cstr3_drift(x, c);
    const std::vector<Dimension> expected{conc / minute, conc / minute, kelvin / minute};
    std::vector<std::string> out;
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (y[i].dim != expected[i])
            throw DimensionError("cstr3 drift component " + std::to_string(i + 1) + " has unit " + to_string(y[i].dim) +
                                 ", expected " + to_string(expected[i]));
        out.push_back(to_string(y[i].dim));
    }
    return out;
}

inline ControlAffineSystem build_cstr3(const Cstr3Params& p = {})
{
    p.validate();
    cstr3_audit_units(p);
    const double inf = std::numeric_limits<double>::infinity();
    Box domain{(Vec(3) << -inf, -inf, 0.0).finished(), Vec::Constant(3, inf)};
    const auto c = detail::plain_coeffs(p);
    const double d = p.F / p.V;
    ControlAffineSystem s;
    s.name = "cstr3";
    s.drift = make_field(3, [c](const auto& x) { return detail::cstr3_drift(x, c); }, "f0", domain);
    s.inputs = {constant_field((Vec(3) << d, 0.0, 0.0).finished(), "g1"), constant_field((Vec(3) << 0.0, 0.0, d).finished(), "g2")};
    s.control_box = {{p.u1bar - p.u1amp, p.u1bar + p.u1amp}, {p.u2bar - p.u2amp, p.u2bar + p.u2amp}};
    s.domain = domain;
    s.state_labels = {"cA", "cB", "T"};
    s.state_units = {"mol/L", "mol/L", "K"};
    s.control_labels = {"cA_in", "T_in"};
    s.control_units = {"mol/L", "K"};
    s.validate();
    return s;
}

/// x' = A x + B u with u in [umin, umax].
inline ControlAffineSystem synthetic_linear(const Mat& a, const Mat& b, const Vec& umin, const Vec& umax)
{
    if (a.rows() != a.cols()) throw DimensionError("synthetic_linear: A must be square");
    if (b.rows() != a.rows()) throw DimensionError("synthetic_linear: B must have as many rows as A");
    if (umin.size() != b.cols() || umax.size() != b.cols())
        throw DimensionError("synthetic_linear: control bounds must match the columns of B");
    const int n = int(a.rows());
    ControlAffineSystem s;
    s.name = "linear";
    s.drift = linear_field(a, "f0");
    for (Eigen::Index j = 0; j < b.cols(); ++j) {
        s.inputs.push_back(constant_field(b.col(j), "g" + std::to_string(j + 1)));
        s.control_box.push_back({umin(j), umax(j)});
        s.control_labels.push_back("u" + std::to_string(j + 1));
        s.control_units.push_back("1");
    }
    s.domain = Box::unbounded(n);
    for (int i = 0; i < n; ++i) {
        s.state_labels.push_back("x" + std::to_string(i + 1));
        s.state_units.push_back("1");
    }
    s.validate();
    return s;
}

inline ControlAffineSystem synthetic_linear(const Mat& a, const Mat& b)
{
    return synthetic_linear(a, b, Vec::Constant(b.cols(), -1.0), Vec::Constant(b.cols(), 1.0));
}

/// x1' = omega x2, x2' = -omega x1 + u.
inline ControlAffineSystem harmonic_oscillator(double omega = 1.0)
{
    Mat a(2, 2);
    a << 0.0, omega, -omega, 0.0;
    Mat b(2, 1);
    b << 0.0, 1.0;
    auto s = synthetic_linear(a, b);
    s.name = "harmonic";
    return s;
}

} // namespace bchd_orbit
