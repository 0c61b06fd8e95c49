#include <gtest/gtest.h>

#include <cmath>

#include "bchd_orbit/models.hpp"
#include "bchd_orbit/solve.hpp"

using namespace bchd_orbit;

namespace {

Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }

struct Cstr2Setup {
    ControlAffineSystem sys = build_cstr2();
    SwitchingSchedule schedule = SwitchingSchedule::symmetric_bang_bang(sys, 1.0);
};

} // namespace

TEST(FindEquilibrium, AveragedFieldHasTrivialZero)
{
    Cstr2Setup c;
    const auto f = truncated_field(c.sys, c.schedule, 1);
    const auto rep = find_equilibrium(f, v2(0.1, 0.1));
    ASSERT_TRUE(rep.converged) << rep.message;
    EXPECT_LT(rep.x_star.cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE(f(rep.x_star).norm(), SolverConfig{}.tol_residual);
    ASSERT_EQ(rep.jacobian_eigenvalues.size(), 2u);
}

TEST(FindEquilibrium, LinearFieldOracle)
{
    Mat a(2, 2);
    a << -1.0, 0.5, 0.2, -2.0;
    const Vec b = v2(0.3, -0.7);
    const auto f = linear_combination({linear_field(a), constant_field(b)}, {1.0, 1.0}, "affine");
    const auto rep = find_equilibrium(f, Vec::Zero(2));
    ASSERT_TRUE(rep.converged);
    EXPECT_LT((rep.x_star - a.lu().solve(-b)).norm(), 1e-12);
    EXPECT_LE(rep.iterations, 2);
}

TEST(FindEquilibrium, SingularJacobianReportsFailure)
{
    const auto f = constant_field(v2(1.0, 1.0), "const");
    const auto rep = find_equilibrium(f, Vec::Zero(2));
    EXPECT_FALSE(rep.converged);
    EXPECT_NE(rep.message.find("singular"), std::string::npos);
}

TEST(FindEquilibrium, MaxIterationsKeepsBestIterate)
{
    Cstr2Setup c;
    SolverConfig cfg;
    cfg.max_iter = 1;
    const auto f = truncated_field(c.sys, c.schedule, 4);
    const auto rep = find_equilibrium(f, v2(-0.3, -0.02), cfg);
    EXPECT_FALSE(rep.converged);
    EXPECT_EQ(rep.iterations, 1);
    EXPECT_LT(rep.residual_norm, f(v2(-0.3, -0.02)).norm());
}

TEST(RefineChain, TableOneRows)
{
    Cstr2Setup c;
    const auto reps = refine_chain(c.sys, c.schedule, {1, 2, 3, 4}, v2(0.1, 0.1));
    ASSERT_EQ(reps.size(), 4u);
    const std::vector<Vec> expect{v2(0, 0), v2(-0.3651, -0.01796), v2(-0.4638, -0.01644), v2(-0.4384, -0.01634)};
    for (std::size_t k = 0; k < 4; ++k) {
        ASSERT_TRUE(reps[k].converged) << "M = " << k + 1 << ": " << reps[k].message;
        EXPECT_LT((reps[k].x_star - expect[k]).cwiseAbs().maxCoeff(), 1e-3) << "M = " << k + 1;
        EXPECT_LE(reps[k].iterations, 6) << "M = " << k + 1;
        const auto f = truncated_field(c.sys, c.schedule, int(k) + 1);
        EXPECT_LE(f(reps[k].x_star).norm(), SolverConfig{}.tol_residual);
    }
}

TEST(RefineChain, GuessLocality)
{
    Cstr2Setup c;
    const auto f = truncated_field(c.sys, c.schedule, 4);
    const auto base = find_equilibrium(f, v2(-0.4384, -0.01634));
    const auto moved = find_equilibrium(f, v2(-0.4384 + 1e-3, -0.01634 + 1e-3));
    ASSERT_TRUE(base.converged && moved.converged);
    EXPECT_LT((base.x_star - moved.x_star).norm(), 1e-10);
}

TEST(FindEquilibrium, ResidualWithoutStepTestStopsEarlyForSmallFields)
{
    Cstr2Setup c;
    const auto s = SwitchingSchedule::symmetric_bang_bang(c.sys, 1e-6);
    SolverConfig loose;
    loose.converge_step = 0.0;
    const auto f = truncated_field(c.sys, s, 1);
    const auto early = find_equilibrium(f, v2(0.01, 0.01), loose);
    const auto full = find_equilibrium(f, v2(0.01, 0.01));
    ASSERT_TRUE(early.converged && full.converged);
    EXPECT_GT(early.x_star.norm(), 1e-6);
    EXPECT_LT(full.x_star.norm(), 1e-12);
}

TEST(RefineChain, SmallTauEquilibriumNearOrigin)
{
    Cstr2Setup c;
    const auto s = SwitchingSchedule::symmetric_bang_bang(c.sys, 1e-6);
    const auto reps = refine_chain(c.sys, s, {1, 2, 3, 4}, v2(0.01, 0.01));
    for (const auto& r : reps) {
        ASSERT_TRUE(r.converged);
        EXPECT_LT(r.x_star.norm(), 1e-6);
    }
}

TEST(Shooting, CstrFixedPoint)
{
    Cstr2Setup c;
    const auto rep = solve_shooting(c.sys, c.schedule, v2(-0.4384, -0.01634));
    ASSERT_TRUE(rep.converged) << rep.message;
    EXPECT_LT((rep.x_star - v2(-0.4314, -0.01646)).cwiseAbs().maxCoeff(), 2e-3);
    ASSERT_EQ(rep.jacobian_eigenvalues.size(), 2u);
    for (auto l : rep.jacobian_eigenvalues) EXPECT_LT(std::abs(l), 1.0);
    const auto tr = simulate_periods(c.sys, c.schedule, rep.x_star, 5, {}, 0, false);
    for (const auto& p : tr.poincare_samples()) EXPECT_LT((p - rep.x_star).norm(), 1e-8);
}

TEST(Shooting, LinearGeometricSeriesOracle)
{
    const auto sys = synthetic_linear(-Mat::Identity(1, 1), Mat::Identity(1, 1));
    for (double tau : {0.3, 1.0, 2.5}) {
        const auto s = SwitchingSchedule::symmetric_bang_bang(sys, tau);
        const double q = std::exp(-tau / 2);
        const double expect = (q * 1.0 + -1.0) / (1.0 + q);
        const auto rep = solve_shooting(sys, s, Vec::Zero(1));
        ASSERT_TRUE(rep.converged);
        EXPECT_NEAR(rep.x_star(0), expect, 1e-9);
        EXPECT_NEAR(rep.jacobian_eigenvalues[0].real(), std::exp(-tau), 1e-8);
    }
}

TEST(Shooting, ConsistencyWithTruncatedField)
{
    Cstr2Setup c;
    const auto shoot = solve_shooting(c.sys, c.schedule, v2(-0.4384, -0.01634));
    ASSERT_TRUE(shoot.converged);
    for (double tau : {0.2, 0.1}) {
        const auto s = SwitchingSchedule::symmetric_bang_bang(c.sys, tau);
        const auto x = solve_shooting(c.sys, s, Vec::Zero(2)).x_star;
        const double r = truncated_field(c.sys, s, 4)(x).norm();
        EXPECT_LT(r, 50.0 * std::pow(tau, 5)) << "tau = " << tau;
    }
}

TEST(FlowAutonomous, TruncatedFieldAttractsToEquilibrium)
{
    Cstr2Setup c;
    const auto f = truncated_field(c.sys, c.schedule, 4);
    const auto eq = find_equilibrium(f, v2(-0.4384, -0.01634));
    const Vec x = flow_autonomous(f, v2(0.2, 0.1), 50.0);
    EXPECT_LT((x - eq.x_star).norm(), 1e-4);
}

TEST(FlowAutonomous, TruncatedFieldLeavesDomainFarFromOrigin)
{
    Cstr2Setup c;
    const auto f = truncated_field(c.sys, c.schedule, 4);
    try {
        flow_autonomous(f, v2(0.3, 0.2), 50.0);
        FAIL() << "expected an IntegrationError";
    } catch (const IntegrationError& e) {
        EXPECT_LT(e.last_state()(0), -0.99);
        EXPECT_LT(f(e.last_state())(0), 0.0);
    }
}

TEST(Report, TextAndCsv)
{
    EquilibriumReport r;
    r.label = "F~4";
    r.x_star = v2(-0.5, 0.25);
    r.residual_norm = 1e-12;
    r.iterations = 3;
    r.converged = true;
    r.jacobian_eigenvalues = {{-1.0, 0.5}, {-1.0, -0.5}};
    r.message = "ok, done";
    const auto text = r.to_text();
    EXPECT_NE(text.find("x_star=-0.5,0.25\n"), std::string::npos);
    EXPECT_NE(text.find("converged=true\n"), std::string::npos);
    EXPECT_EQ(EquilibriumReport::csv_header(2), "label,kind,converged,iterations,residual_norm,x1,x2,eigenvalues,message");
    EXPECT_EQ(r.csv_row(), "F~4,equilibrium,true,3,1e-12,-0.5,0.25,-1+0.5i;-1-0.5i,\"ok, done\"");
}
