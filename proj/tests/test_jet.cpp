#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <vector>

#include "bchd_orbit/jet.hpp"

using namespace bchd_orbit;

namespace {

std::size_t index2(const JetLayoutPtr& layout, int a, int b)
{
    std::vector<std::uint8_t> e{std::uint8_t(a), std::uint8_t(b)};
    return layout->index_of(e);
}

// Checks value, gradient and Hessian/2 coefficients of a two-variable jet function
// against central finite differences of its real counterpart.
void check_second_order(const std::function<Jet(const Jet&, const Jet&)>& fj,
                        const std::function<double(double, double)>& fd, double x, double y, double tol)
{
    auto seed = seed_identity(std::vector<double>{x, y}, 2);
    const Jet r = fj(seed[0], seed[1]);
    const auto& layout = seed[0].layout();
    const double h = 1e-4;
    EXPECT_NEAR(r.value(), fd(x, y), 1e-14 * std::max(1.0, std::abs(fd(x, y))));
    const double fx = (fd(x + h, y) - fd(x - h, y)) / (2 * h);
    const double fy = (fd(x, y + h) - fd(x, y - h)) / (2 * h);
    const double fxx = (fd(x + h, y) - 2 * fd(x, y) + fd(x - h, y)) / (h * h);
    const double fyy = (fd(x, y + h) - 2 * fd(x, y) + fd(x, y - h)) / (h * h);
    const double fxy = (fd(x + h, y + h) - fd(x + h, y - h) - fd(x - h, y + h) + fd(x - h, y - h)) / (4 * h * h);
    EXPECT_NEAR(r.first(0), fx, tol);
    EXPECT_NEAR(r.first(1), fy, tol);
    EXPECT_NEAR(r.coeff(index2(layout, 2, 0)), fxx / 2, 1e3 * tol);
    EXPECT_NEAR(r.coeff(index2(layout, 0, 2)), fyy / 2, 1e3 * tol);
    EXPECT_NEAR(r.coeff(index2(layout, 1, 1)), fxy, 1e3 * tol);
}

} // namespace

TEST(Jet, LayoutCountsMonomials)
{
    auto l = JetLayout::get(3, 4);
    EXPECT_EQ(l->size(), 35u);
    EXPECT_EQ(JetLayout::get(3, 4), l);
    EXPECT_EQ(l->degree(0), 0);
}

TEST(Jet, ConstantCombinesWithAnyLayout)
{
    auto s = seed_identity(std::vector<double>{2.0}, 3);
    Jet c(5.0);
    EXPECT_TRUE(c.is_constant_only());
    Jet r = c + s[0];
    EXPECT_EQ(r.layout(), s[0].layout());
    EXPECT_DOUBLE_EQ(r.value(), 7.0);
    EXPECT_DOUBLE_EQ(r.first(0), 1.0);
}

TEST(Jet, MismatchedLayoutsThrow)
{
    auto a = seed_identity(std::vector<double>{1.0}, 2);
    auto b = seed_identity(std::vector<double>{1.0}, 3);
    EXPECT_THROW(a[0] * b[0], DimensionError);
}

TEST(Jet, ProductAndQuotientRules)
{
    check_second_order([](const Jet& x, const Jet& y) { return x * y * y + 3.0 * x; },
                       [](double x, double y) { return x * y * y + 3.0 * x; }, 0.7, -1.3, 1e-7);
    check_second_order([](const Jet& x, const Jet& y) { return (x + 2.0) / (y * y + 1.0); },
                       [](double x, double y) { return (x + 2.0) / (y * y + 1.0); }, 0.4, 0.9, 1e-7);
}

TEST(Jet, ElementaryFunctions)
{
    check_second_order([](const Jet& x, const Jet& y) { return exp(x * y); }, [](double x, double y) { return std::exp(x * y); },
                       0.3, 0.8, 1e-7);
    check_second_order([](const Jet& x, const Jet& y) { return log(x + y * y); },
                       [](double x, double y) { return std::log(x + y * y); }, 1.2, 0.5, 1e-7);
    check_second_order([](const Jet& x, const Jet& y) { return expm1(x) * log1p(y); },
                       [](double x, double y) { return std::expm1(x) * std::log1p(y); }, 0.1, -0.4, 1e-7);
    check_second_order([](const Jet& x, const Jet& y) { return pow(x, 2.5) + pow(y, 3); },
                       [](double x, double y) { return std::pow(x, 2.5) + y * y * y; }, 1.7, -0.6, 1e-6);
    check_second_order([](const Jet& x, const Jet& y) { return sin(x) * cos(y) + sqrt(x); },
                       [](double x, double y) { return std::sin(x) * std::cos(y) + std::sqrt(x); }, 0.9, 0.2, 1e-7);
    check_second_order([](const Jet& x, const Jet& y) { return exp(-17.77 / (y + 1.0)) * x; },
                       [](double x, double y) { return std::exp(-17.77 / (y + 1.0)) * x; }, 0.2, 0.1, 1e-10);
}

TEST(Jet, OrderZeroMatchesPlainArithmetic)
{
    auto s = seed_identity(std::vector<double>{0.37, 1.9}, 0);
    const Jet r = exp(s[0]) * log(s[1]) / pow(s[1], 1.5) - sin(s[0]);
    const double expect = std::exp(0.37) * std::log(1.9) / std::pow(1.9, 1.5) - std::sin(0.37);
    EXPECT_EQ(r.value(), expect);
    EXPECT_EQ(r.size(), 1u);
}

TEST(Jet, HighOrderUnivariateExp)
{
    auto s = seed_identity(std::vector<double>{0.0}, 8);
    const Jet e = exp(s[0]);
    double f = 1.0;
    for (int k = 0; k <= 8; ++k) {
        EXPECT_NEAR(e.coeff(std::size_t(k)), 1.0 / f, 1e-15);
        f *= (k + 1);
    }
}

TEST(Jet, DerivativeShiftsCoefficients)
{
    auto s = seed_identity(std::vector<double>{1.0, 2.0}, 3);
    const Jet p = s[0] * s[0] * s[1];
    const Jet d = p.derivative(0);
    EXPECT_DOUBLE_EQ(d.value(), 4.0);
    EXPECT_DOUBLE_EQ(d.first(0), 4.0);
    EXPECT_DOUBLE_EQ(d.first(1), 2.0);
}

TEST(Jet, RestrictedTruncates)
{
    auto s = seed_identity(std::vector<double>{0.5, 0.5}, 4);
    const Jet e = exp(s[0] + s[1]);
    const Jet r = e.restricted(JetLayout::get(2, 1));
    EXPECT_EQ(r.size(), 3u);
    EXPECT_DOUBLE_EQ(r.value(), e.value());
    EXPECT_DOUBLE_EQ(r.first(1), e.first(1));
}

TEST(Jet, NonFiniteIsDetectable)
{
    auto s = seed_identity(std::vector<double>{-1.0}, 2);
    EXPECT_FALSE(log1p(s[0]).all_finite());
}
