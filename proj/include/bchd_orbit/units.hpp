#pragma once

#include <array>
#include <cmath>
#include <string>

#include "error.hpp"

namespace bchd_orbit::units {

/// Exponents over the base units mol, L, min, K, J.
using Dimension = std::array<int, 5>;

inline constexpr Dimension dimensionless{0, 0, 0, 0, 0};
inline constexpr Dimension mol{1, 0, 0, 0, 0};
inline constexpr Dimension litre{0, 1, 0, 0, 0};
inline constexpr Dimension minute{0, 0, 1, 0, 0};
inline constexpr Dimension kelvin{0, 0, 0, 1, 0};
inline constexpr Dimension joule{0, 0, 0, 0, 1};

constexpr Dimension operator*(const Dimension& a, const Dimension& b)
{
    Dimension r{};
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = a[i] + b[i];
    return r;
}

constexpr Dimension operator/(const Dimension& a, const Dimension& b)
{
    Dimension r{};
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = a[i] - b[i];
    return r;
}

inline std::string to_string(const Dimension& d)
{
    static const char* names[] = {"mol", "L", "min", "K", "J"};
    std::string num, den;
    for (std::size_t i = 0; i < d.size(); ++i) {
        if (d[i] == 0) continue;
        std::string& s = d[i] > 0 ? num : den;
        if (!s.empty()) s += "*";
        s += names[i];
        if (std::abs(d[i]) != 1) s += "^" + std::to_string(std::abs(d[i]));
    }
    if (num.empty()) num = "1";
    return den.empty() ? num : num + "/(" + den + ")";
}

/// A value with a physical dimension; mixing incompatible dimensions throws.
struct Quantity {
    double value = 0.0;
    Dimension dim = dimensionless;

    Quantity() = default;
    Quantity(double v, Dimension d = dimensionless) : value(v), dim(d) {}

    Quantity operator-() const { return {-value, dim}; }

    friend Quantity operator+(const Quantity& a, const Quantity& b)
    {
        check_same(a, b, "+");
        return {a.value + b.value, a.dim};
    }
    friend Quantity operator-(const Quantity& a, const Quantity& b)
    {
        check_same(a, b, "-");
        return {a.value - b.value, a.dim};
    }
    friend Quantity operator*(const Quantity& a, const Quantity& b) { return {a.value * b.value, a.dim * b.dim}; }
    friend Quantity operator/(const Quantity& a, const Quantity& b) { return {a.value / b.value, a.dim / b.dim}; }

private:
    static void check_same(const Quantity& a, const Quantity& b, const char* op)
    {
        if (a.dim != b.dim)
            throw DimensionError(std::string("unit mismatch in '") + op + "': " + to_string(a.dim) + " vs " + to_string(b.dim));
    }
};

inline Quantity exp(const Quantity& q)
{
    if (q.dim != dimensionless) throw DimensionError("exp of a dimensioned quantity: " + to_string(q.dim));
    return {std::exp(q.value), dimensionless};
}

} // namespace bchd_orbit::units
