#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "error.hpp"
#include "jet.hpp"
#include "linalg.hpp"

namespace bchd_orbit {

/// Axis-aligned open box; infinite bounds allowed.
struct Box {
    Vec lower;
    Vec upper;

    static Box unbounded(int n)
    {
        const double inf = std::numeric_limits<double>::infinity();
        return {Vec::Constant(n, -inf), Vec::Constant(n, inf)};
    }

    int dim() const { return int(lower.size()); }

    bool contains(const Vec& x) const
    {
        if (x.size() != lower.size()) return false;
        for (Eigen::Index i = 0; i < x.size(); ++i)
            if (!(x(i) > lower(i) && x(i) < upper(i))) return false;
        return true;
    }

    bool operator==(const Box& o) const { return lower == o.lower && upper == o.upper; }
};

/// Type-erased smooth vector field on R^n, evaluable on reals and on jets.
///
/// Evaluation is pure and reentrant. Every result is checked for finiteness
/// (at all jet levels); failures raise DomainError.
class VectorField {
public:
    using JetVector = std::vector<Jet>;
    using ValueFn = std::function<Vec(const Vec&)>;
    using JetFn = std::function<JetVector(const JetVector&)>;

    VectorField() = default;

    VectorField(int dim, ValueFn value, JetFn jet, std::string name = {}, std::optional<Box> domain = {},
                bool constant = false)
        : dim_(dim), value_(std::move(value)), jet_(std::move(jet)), name_(std::move(name)), domain_(std::move(domain)),
          constant_(constant)
    {
        if (dim_ < 1) throw DimensionError("VectorField: dimension must be positive");
    }

    int dim() const { return dim_; }
    const std::string& name() const { return name_; }
    const std::optional<Box>& domain() const { return domain_; }
    /// True when the field is known to be constant (zero Jacobian everywhere).
    bool is_constant() const { return constant_; }
    explicit operator bool() const { return bool(value_); }

    VectorField with_name(std::string name) const
    {
        VectorField f = *this;
        f.name_ = std::move(name);
        return f;
    }

    VectorField with_domain(std::optional<Box> domain) const
    {
        VectorField f = *this;
        f.domain_ = std::move(domain);
        return f;
    }

    Vec operator()(const Vec& x) const
    {
        require_size(x, dim_, "VectorField");
        Vec y = value_(x);
        if (y.size() != dim_) throw DimensionError("VectorField '" + name_ + "': wrong output length");
        if (!y.allFinite()) throw DomainError("VectorField '" + name_ + "': non-finite value");
        return y;
    }

    JetVector operator()(const JetVector& x) const
    {
        if (int(x.size()) != dim_) throw DimensionError("VectorField '" + name_ + "': wrong jet input length");
        JetVector y = jet_(x);
        if (int(y.size()) != dim_) throw DimensionError("VectorField '" + name_ + "': wrong output length");
        for (const auto& c : y)
            if (!c.all_finite()) throw DomainError("VectorField '" + name_ + "': non-finite jet coefficient");
        return y;
    }

    /// Taylor expansion of the field at x in the displacement, up to `order`.
    JetVector taylor(const Vec& x, int order) const
    {
        require_size(x, dim_, "VectorField::taylor");
        return (*this)(seed_identity(std::span<const double>(x.data(), x.size()), order));
    }

    /// d field_i / d x_j via first-order jets.
    Mat jacobian(const Vec& x) const
    {
        const auto t = taylor(x, 1);
        Mat j(dim_, dim_);
        for (int i = 0; i < dim_; ++i)
            for (int k = 0; k < dim_; ++k) j(i, k) = t[i].first(k);
        return j;
    }

    bool in_domain(const Vec& x) const { return !domain_ || domain_->contains(x); }

private:
    int dim_ = 0;
    ValueFn value_;
    JetFn jet_;
    std::string name_;
    std::optional<Box> domain_;
    bool constant_ = false;
};

/// Wrap a generic callable `F(const std::vector<T>&) -> std::vector<T>` for T = double and T = Jet.
template <class F>
VectorField make_field(int dim, F f, std::string name = {}, std::optional<Box> domain = {}, bool constant = false)
{
    auto value = [f](const Vec& x) {
        std::vector<double> xs(x.data(), x.data() + x.size());
        auto y = f(xs);
        return Vec(Eigen::Map<const Vec>(y.data(), Eigen::Index(y.size())));
    };
    auto jet = [f](const VectorField::JetVector& x) { return f(x); };
    return VectorField(dim, std::move(value), std::move(jet), std::move(name), std::move(domain), constant);
}

inline VectorField constant_field(const Vec& c, std::string name = "const")
{
    const int n = int(c.size());
    auto value = [c](const Vec&) { return c; };
    auto jet = [c](const VectorField::JetVector& x) {
        VectorField::JetVector y;
        y.reserve(c.size());
        const auto& layout = x.empty() ? JetLayoutPtr{} : x.front().layout();
        for (Eigen::Index i = 0; i < c.size(); ++i) y.push_back(layout ? Jet(layout, c(i)) : Jet(c(i)));
        return y;
    };
    return VectorField(n, value, jet, std::move(name), std::nullopt, true);
}

/// x -> A x
inline VectorField linear_field(const Mat& a, std::string name = "linear")
{
    if (a.rows() != a.cols()) throw DimensionError("linear_field: matrix not square");
    const int n = int(a.rows());
    return make_field(
        n,
        [a, n](const auto& x) {
            using T = std::decay_t<decltype(x[0])>;
            std::vector<T> y(n, T(0.0));
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    if (a(i, j) != 0.0) y[i] += a(i, j) * x[j];
            return y;
        },
        std::move(name));
}

/// sum_k c_k * fields_k
inline VectorField linear_combination(const std::vector<VectorField>& fields, const std::vector<double>& coeffs,
                                      std::string name = {})
{
    if (fields.empty() || fields.size() != coeffs.size())
        throw DimensionError("linear_combination: need matching non-empty field and coefficient lists");
    const int n = fields.front().dim();
    bool constant = true;
    for (const auto& f : fields) {
        if (f.dim() != n) throw DimensionError("linear_combination: fields differ in dimension");
        constant = constant && f.is_constant();
    }
    std::optional<Box> domain;
    for (const auto& f : fields)
        if (f.domain()) domain = f.domain();
    auto value = [fields, coeffs](const Vec& x) {
        Vec y = Vec::Zero(x.size());
        for (std::size_t k = 0; k < fields.size(); ++k)
            if (coeffs[k] != 0.0) y += coeffs[k] * fields[k](x);
        return y;
    };
    auto jet = [fields, coeffs, n](const VectorField::JetVector& x) {
        VectorField::JetVector y(n, Jet(0.0));
        for (std::size_t k = 0; k < fields.size(); ++k) {
            if (coeffs[k] == 0.0) continue;
            auto fk = fields[k](x);
            for (int i = 0; i < n; ++i) y[i] += coeffs[k] * fk[i];
        }
        return y;
    };
    return VectorField(n, value, jet, std::move(name), std::move(domain), constant);
}

} // namespace bchd_orbit
