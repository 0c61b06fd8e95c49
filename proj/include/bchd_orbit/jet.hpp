#pragma once

// Truncated multivariate Taylor arithmetic.
//
// A Jet holds the coefficients of a polynomial in `nvars` seed variables,
// truncated at total degree `order`. Arithmetic on jets propagates the full
// Taylor expansion, so evaluating a field on seeded jets yields its value,
// Jacobian and higher derivatives in one pass.

#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <span>
#include <utility>
#include <vector>

#include "error.hpp"

namespace bchd_orbit {

class JetLayout {
public:
    struct Product {
        std::uint32_t lhs, rhs, out;
    };
    struct Derivative {
        std::uint32_t src, dst;
        double factor;
    };

    /// Shared, immutable layout for (nvars, order). Thread-safe.
    static std::shared_ptr<const JetLayout> get(int nvars, int order)
    {
        if (nvars < 1 || order < 0) throw InvalidArgument("JetLayout: nvars >= 1 and order >= 0 required");
        static std::mutex mutex;
        static std::map<std::pair<int, int>, std::shared_ptr<const JetLayout>> cache;
        std::lock_guard lock(mutex);
        auto& slot = cache[{nvars, order}];
        if (!slot) slot = std::shared_ptr<const JetLayout>(new JetLayout(nvars, order));
        return slot;
    }

    int nvars() const { return nvars_; }
    int order() const { return order_; }
    std::size_t size() const { return exponents_.size(); }
    int degree(std::size_t idx) const { return degrees_[idx]; }
    std::span<const std::uint8_t> exponents(std::size_t idx) const { return exponents_[idx]; }
    const std::vector<Product>& products() const { return products_; }
    const std::vector<Derivative>& derivatives(int var) const { return derivatives_[var]; }

    /// Index of the monomial with the given exponents, or size() when it exceeds the order.
    std::size_t index_of(std::span<const std::uint8_t> e) const
    {
        auto it = index_.find(std::vector<std::uint8_t>(e.begin(), e.end()));
        return it == index_.end() ? size() : it->second;
    }

private:
    JetLayout(int nvars, int order) : nvars_(nvars), order_(order)
    {
        std::vector<std::uint8_t> e(nvars, 0);
        for (int d = 0; d <= order; ++d) enumerate(e, 0, d);
        for (std::size_t i = 0; i < exponents_.size(); ++i) index_[exponents_[i]] = i;

        for (std::size_t i = 0; i < size(); ++i) {
            for (std::size_t j = 0; j < size(); ++j) {
                if (degrees_[i] + degrees_[j] > order) continue;
                std::vector<std::uint8_t> s(nvars);
                for (int v = 0; v < nvars; ++v) s[v] = exponents_[i][v] + exponents_[j][v];
                products_.push_back({std::uint32_t(i), std::uint32_t(j), std::uint32_t(index_.at(s))});
            }
        }
        derivatives_.resize(nvars);
        for (int v = 0; v < nvars; ++v) {
            for (std::size_t i = 0; i < size(); ++i) {
                if (exponents_[i][v] == 0) continue;
                auto s = exponents_[i];
                const double f = s[v];
                --s[v];
                derivatives_[v].push_back({std::uint32_t(i), std::uint32_t(index_.at(s)), f});
            }
        }
    }

    void enumerate(std::vector<std::uint8_t>& e, int var, int remaining)
    {
        if (var == nvars_ - 1) {
            e[var] = std::uint8_t(remaining);
            exponents_.push_back(e);
            int d = 0;
            for (auto x : e) d += x;
            degrees_.push_back(d);
            return;
        }
        for (int k = remaining; k >= 0; --k) {
            e[var] = std::uint8_t(k);
            enumerate(e, var + 1, remaining - k);
        }
        e[var] = 0;
    }

    int nvars_;
    int order_;
    std::vector<std::vector<std::uint8_t>> exponents_;
    std::vector<int> degrees_;
    std::map<std::vector<std::uint8_t>, std::size_t> index_;
    std::vector<Product> products_;
    std::vector<std::vector<Derivative>> derivatives_;
};

using JetLayoutPtr = std::shared_ptr<const JetLayout>;

class Jet {
public:
    /// Layout-free constant; combines with any layout.
    Jet(double value = 0.0) : coeffs_{value} {}

    Jet(JetLayoutPtr layout, double value) : layout_(std::move(layout)), coeffs_(layout_->size(), 0.0)
    {
        coeffs_[0] = value;
    }

    /// value + 1 * s_var
    static Jet variable(JetLayoutPtr layout, double value, int var)
    {
        Jet j(layout, value);
        if (layout->order() >= 1) {
            std::vector<std::uint8_t> e(layout->nvars(), 0);
            e[var] = 1;
            j.coeffs_[layout->index_of(e)] = 1.0;
        }
        return j;
    }

    const JetLayoutPtr& layout() const { return layout_; }
    bool is_constant_only() const { return !layout_; }
    double value() const { return coeffs_[0]; }
    std::size_t size() const { return coeffs_.size(); }
    double coeff(std::size_t idx) const { return idx < coeffs_.size() ? coeffs_[idx] : 0.0; }
    double& coeff_ref(std::size_t idx) { return coeffs_[idx]; }
    std::span<const double> coeffs() const { return coeffs_; }

    /// Coefficient of the first-order monomial s_var.
    double first(int var) const
    {
        if (!layout_ || layout_->order() < 1) return 0.0;
        std::vector<std::uint8_t> e(layout_->nvars(), 0);
        e[var] = 1;
        return coeffs_[layout_->index_of(e)];
    }

    bool all_finite() const
    {
        for (double c : coeffs_)
            if (!std::isfinite(c)) return false;
        return true;
    }

    /// Partial derivative with respect to seed variable `var` (top degree becomes zero).
    Jet derivative(int var) const
    {
        if (!layout_) return Jet(0.0);
        Jet r(layout_, 0.0);
        for (const auto& d : layout_->derivatives(var)) r.coeffs_[d.dst] += d.factor * coeffs_[d.src];
        return r;
    }

    /// Re-express in another layout with the same variable count (truncating or zero-padding).
    Jet restricted(const JetLayoutPtr& target) const
    {
        if (!layout_) return Jet(target, coeffs_[0]);
        if (target->nvars() != layout_->nvars()) throw DimensionError("Jet::restricted: variable count mismatch");
        Jet r(target, 0.0);
        for (std::size_t i = 0; i < target->size(); ++i) {
            const auto idx = layout_->index_of(target->exponents(i));
            if (idx < size()) r.coeffs_[i] = coeffs_[idx];
        }
        return r;
    }

    /// Sum_k taylor[k] * (x - x0)^k, the composition of a univariate expansion with this jet.
    Jet compose_univariate(std::span<const double> taylor) const
    {
        if (!layout_) return Jet(taylor[0]);
        Jet c = *this;
        c.coeffs_[0] = 0.0;
        const int deg = std::min<int>(int(taylor.size()) - 1, layout_->order());
        Jet r(layout_, taylor[deg]);
        for (int k = deg - 1; k >= 0; --k) {
            r = r * c;
            r.coeffs_[0] += taylor[k];
        }
        return r;
    }

    int order() const { return layout_ ? layout_->order() : 0; }

    Jet operator-() const
    {
        Jet r = *this;
        for (auto& c : r.coeffs_) c = -c;
        return r;
    }

    Jet& operator+=(const Jet& o)
    {
        adopt(o);
        if (!o.layout_) {
            coeffs_[0] += o.coeffs_[0];
        } else {
            for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] += o.coeffs_[i];
        }
        return *this;
    }
    Jet& operator-=(const Jet& o) { return *this += -o; }
    Jet& operator*=(const Jet& o) { return *this = *this * o; }
    Jet& operator/=(const Jet& o) { return *this = *this / o; }

    friend Jet operator+(Jet a, const Jet& b) { return a += b; }
    friend Jet operator-(Jet a, const Jet& b) { return a -= b; }

    friend Jet operator*(const Jet& a, const Jet& b)
    {
        if (!a.layout_) return scaled(b, a.coeffs_[0]);
        if (!b.layout_) return scaled(a, b.coeffs_[0]);
        check_same(a, b);
        Jet r(a.layout_, 0.0);
        const double* x = a.coeffs_.data();
        const double* y = b.coeffs_.data();
        double* z = r.coeffs_.data();
        for (const auto& p : a.layout_->products()) z[p.out] += x[p.lhs] * y[p.rhs];
        return r;
    }

    friend Jet operator/(const Jet& a, const Jet& b)
    {
        if (!b.layout_) return scaled(a, 1.0 / b.coeffs_[0]);
        return a * b.reciprocal();
    }

    Jet reciprocal() const
    {
        const double v = value();
        std::vector<double> t(order() + 1);
        double p = 1.0 / v;
        for (std::size_t k = 0; k < t.size(); ++k) {
            t[k] = (k % 2 ? -p : p);
            p /= v;
        }
        return compose_univariate(t);
    }

private:
    static Jet scaled(Jet a, double s)
    {
        for (auto& c : a.coeffs_) c *= s;
        return a;
    }

    static void check_same(const Jet& a, const Jet& b)
    {
        if (a.layout_ != b.layout_) throw DimensionError("Jet: operands have different layouts");
    }

    // A constant-only jet adopts the layout of the other operand.
    void adopt(const Jet& o)
    {
        if (!o.layout_) return;
        if (!layout_) {
            const double v = coeffs_[0];
            *this = Jet(o.layout_, v);
            return;
        }
        check_same(*this, o);
    }

    JetLayoutPtr layout_;
    std::vector<double> coeffs_;
};

namespace detail {

inline std::vector<double> exp_taylor(double v, int order)
{
    std::vector<double> t(order + 1);
    double e = std::exp(v);
    for (int k = 0; k <= order; ++k) {
        t[k] = e;
        e /= (k + 1);
    }
    return t;
}

inline std::vector<double> log_taylor(double shifted_base, double value0, int order)
{
    std::vector<double> t(order + 1);
    t[0] = value0;
    double p = 1.0;
    for (int k = 1; k <= order; ++k) {
        p /= shifted_base;
        t[k] = (k % 2 ? 1.0 : -1.0) * p / k;
    }
    return t;
}

} // namespace detail

inline Jet exp(const Jet& a) { return a.compose_univariate(detail::exp_taylor(a.value(), a.order())); }

inline Jet expm1(const Jet& a)
{
    auto t = detail::exp_taylor(a.value(), a.order());
    t[0] = std::expm1(a.value());
    return a.compose_univariate(t);
}

inline Jet log(const Jet& a) { return a.compose_univariate(detail::log_taylor(a.value(), std::log(a.value()), a.order())); }

inline Jet log1p(const Jet& a)
{
    return a.compose_univariate(detail::log_taylor(1.0 + a.value(), std::log1p(a.value()), a.order()));
}

inline Jet pow(const Jet& a, double p)
{
    const int d = a.order();
    std::vector<double> t(d + 1);
    const double v = a.value();
    double binom = 1.0;
    for (int k = 0; k <= d; ++k) {
        t[k] = binom * std::pow(v, p - k);
        binom *= (p - k) / (k + 1);
    }
    return a.compose_univariate(t);
}

inline Jet pow(const Jet& a, int p)
{
    if (p == 0) return Jet(1.0);
    if (p < 0) return pow(a, -p).reciprocal();
    Jet r = a;
    for (int k = 1; k < p; ++k) r = r * a;
    return r;
}

inline Jet sqrt(const Jet& a) { return pow(a, 0.5); }

inline Jet sin(const Jet& a)
{
    const int d = a.order();
    std::vector<double> t(d + 1);
    double f = 1.0;
    for (int k = 0; k <= d; ++k) {
        t[k] = std::sin(a.value() + k * std::numbers::pi / 2) / f;
        f *= (k + 1);
    }
    return a.compose_univariate(t);
}

inline Jet cos(const Jet& a)
{
    const int d = a.order();
    std::vector<double> t(d + 1);
    double f = 1.0;
    for (int k = 0; k <= d; ++k) {
        t[k] = std::cos(a.value() + k * std::numbers::pi / 2) / f;
        f *= (k + 1);
    }
    return a.compose_univariate(t);
}

/// Seed `x + s` as n jets in n variables of the given order.
inline std::vector<Jet> seed_identity(std::span<const double> x, int order)
{
    auto layout = JetLayout::get(int(x.size()), order);
    std::vector<Jet> r;
    r.reserve(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) r.push_back(Jet::variable(layout, x[i], int(i)));
    return r;
}

} // namespace bchd_orbit
