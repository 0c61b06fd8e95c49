#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "bchd_orbit.hpp"

using namespace bchd_orbit;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v)
{
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }
Vec v3(double a, double b, double c) { return (Vec(3) << a, b, c).finished(); }

const std::vector<Vec>& table_rows()
{
    static const std::vector<Vec> rows{v2(0.0, 0.0), v2(-0.3651, -0.01796), v2(-0.4638, -0.01644), v2(-0.4384, -0.01634)};
    return rows;
}

const Vec kShootingRef = v2(-0.4314, -0.01646);
const Vec kCstr3EquilibriumRef = v3(0.2582478, 0.6062874, 357.4668);
const Vec kCstr3SteadyGuess = v3(0.3683, 0.6189, 357.7354);

Mat reference_metric()
{
    Mat m(3, 3);
    m << 32.1045, 1.3812, 4.1283, 1.3812, 0.5365, 0.1375, 4.1283, 0.1375, 0.6974;
    return m;
}

std::vector<std::string> split_csv_prefix(const std::string& line)
{
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cells.push_back(c);
    return cells;
}

Outcome criterion_1()
{
    const auto t0 = Clock::now();
    const auto out = std::filesystem::temp_directory_path() / "bchd_orbit_acceptance_c1";
    std::filesystem::remove_all(out);
    const std::string cmd = std::string("\"") + BCHD_ORBIT_CLI + "\" reproduce-paper --only cstr2 --out \"" + out.string() + "\" 2>/dev/null";
    const int rc = std::system(cmd.c_str());
    const double elapsed = seconds_since(t0);
    std::ifstream in(out / "cstr2" / "equilibria.csv");
    if (!in) return {false, "no equilibria.csv (exit status " + std::to_string(rc) + ")"};
    std::string line;
    std::getline(in, line);
    std::map<std::string, Vec> found;
    while (std::getline(in, line)) {
        const auto cells = split_csv_prefix(line);
        if (cells.size() < 7 || cells[2] != "true") continue;
        found[cells[0]] = v2(std::stod(cells[5]), std::stod(cells[6]));
    }
    double worst = 0.0;
    for (int m = 1; m <= 4; ++m) {
        const auto it = found.find("F~" + std::to_string(m));
        if (it == found.end()) return {false, "no converged row for M = " + std::to_string(m)};
        worst = std::max(worst, (it->second - table_rows()[std::size_t(m - 1)]).cwiseAbs().maxCoeff());
    }
    const bool ok = worst <= 1e-3 && elapsed < 30.0;
    return {ok, "max coordinate deviation " + fmt(worst) + " (tol 1e-3), runtime " + fmt(elapsed) + " s (limit 30 s)"};
}

Outcome criterion_2()
{
    const auto t0 = Clock::now();
    const auto sys = build_cstr2();
    const auto rep = solve_shooting(sys, SwitchingSchedule::symmetric_bang_bang(sys, 1.0), table_rows()[3]);
    const double elapsed = seconds_since(t0);
    const double dev = (rep.x_star - kShootingRef).cwiseAbs().maxCoeff();
    const bool ok = rep.converged && dev <= 2e-3 && elapsed < 10.0;
    return {ok, "x* = (" + format_vector(rep.x_star) + "), deviation " + fmt(dev) + " (tol 2e-3), runtime " + fmt(elapsed) + " s"};
}

Outcome criterion_3()
{
    const auto t0 = Clock::now();
    const auto sys = build_cstr3();
    const auto sched = SwitchingSchedule::symmetric_bang_bang(sys, 1.0);
    const auto f4 = truncated_field(sys, sched, 4);
    const auto eq = find_equilibrium(f4, kCstr3SteadyGuess);
    double rel = 0.0;
    for (int i = 0; i < 3; ++i) rel = std::max(rel, std::abs(eq.x_star(i) - kCstr3EquilibriumRef(i)) / std::abs(kCstr3EquilibriumRef(i)));
    const auto shoot = solve_shooting(sys, sched, eq.x_star);
    const double periodicity = shoot.converged ? (compose_flows(sys, sched, shoot.x_star) - shoot.x_star).norm() : INFINITY;
    const double elapsed = seconds_since(t0);
    const bool ok = eq.converged && rel <= 1e-3 && periodicity <= 1e-6 && elapsed < 60.0;
    return {ok, "F~4 zero (" + format_vector(eq.x_star) + "), max relative deviation " + fmt(rel) +
                    " (tol 1e-3); shooting polish periodicity residual " + fmt(periodicity) + " (tol 1e-6); runtime " + fmt(elapsed) + " s"};
}

Outcome criterion_4()
{
    const auto sys = build_cstr3();
    const auto ss = steady_state(sys, Cstr3Params{}.steady_controls(), kCstr3SteadyGuess);
    const Mat a = sys.drift.jacobian(ss.x_star);
    const Mat m = solve_lyapunov(a, Mat::Identity(3, 3));
    const Mat ref = reference_metric();
    double rel = 0.0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) rel = std::max(rel, std::abs(m(i, j) - ref(i, j)) / std::abs(ref(i, j)));
    const double res = lyapunov_residual(a, Mat::Identity(3, 3), m);
    return {ss.converged && rel <= 1e-3 && res <= 1e-10,
            "max relative entry deviation " + fmt(rel) + " (tol 1e-3), residual " + fmt(res) + " (tol 1e-10)"};
}

Outcome criterion_5()
{
    const auto sys = build_cstr3();
    const auto ss = steady_state(sys, Cstr3Params{}.steady_controls(), kCstr3SteadyGuess);
    const auto region = BoxRegion::around(ss.x_star, v3(0.3, 0.65, 0.999), {20, 20, 20});
    const auto cert = contraction_check(sys, reference_metric(), 0.1, region);
    return {cert.valid(), "worst eigenvalue " + fmt(cert.worst_eigenvalue) + " at (" + format_vector(cert.worst_point) + ") over " +
                              std::to_string(cert.samples_checked) + " samples (needs <= 0)"};
}

Outcome criterion_6()
{
    const auto sys = build_cstr2();
    const auto sched = SwitchingSchedule::symmetric_bang_bang(sys, 1.0);
    const auto region = BoxRegion::uniform(v2(-0.999, -0.999), v2(0.999, 0.999), 200);
    bool ok = true;
    std::string detail;
    for (int m : {2, 3, 4}) {
        const auto rep = dulac_scan(truncated_field(sys, sched, m), region);
        ok = ok && rep.sign_uniform && rep.rho_sign == -1 && rep.domain_failures == 0;
        detail += "M=" + std::to_string(m) + " " + rep.status() + " max div " + fmt(rep.max_divergence) + "; ";
    }
    return {ok, detail + "200x200 grid"};
}

Outcome criterion_7()
{
    bool ok = true;
    std::string failed;
    for (int k = 1; k <= 6; ++k)
        if (!equivalent(recursive_F(2, k), terms_n2_appendix(k))) {
            ok = false;
            failed += " recursive/appendix k=" + std::to_string(k);
        }
    for (int n = 2; n <= 4; ++n)
        if (!equivalent(terms_general(n, 3), recursive_F(n, 3))) {
            ok = false;
            failed += " general/recursive N=" + std::to_string(n);
        }
    return {ok, ok ? "exact canonical equality for k=1..6 and N=2..4" : "mismatch:" + failed};
}

double fitted_slope(const std::vector<double>& x, const std::vector<double>& y)
{
    const double n = double(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

Outcome criterion_8()
{
    const auto sys = build_cstr2();
    ToleranceConfig tight;
    tight.rtol = 1e-13;
    tight.atol = 1e-16;
    const std::vector<double> taus{0.02, 0.04, 0.08, 0.16};
    const Vec x0 = Vec::Zero(2);
    bool ok = true;
    std::string detail;
    for (int m = 1; m <= 4; ++m) {
        std::vector<double> errs;
        for (double tau : taus) {
            const auto sched = SwitchingSchedule::symmetric_bang_bang(sys, tau);
            const Vec a = flow_autonomous(truncated_field(sys, sched, m), x0, 1.0, tight);
            const Vec b = compose_flows(sys, sched, x0, tight);
            errs.push_back((a - b).norm());
        }
        const double slope = fitted_slope(taus, errs);
        ok = ok && slope >= m + 0.7;
        detail += "M=" + std::to_string(m) + " slope " + fmt(slope) + " (min " + fmt(m + 0.7) + "); ";
    }
    return {ok, detail};
}

Outcome criterion_9()
{
    std::mt19937 rng(2024);
    double worst_anti = 0.0, worst_jacobi = 0.0, worst_linear = 0.0;
    auto check_fields = [&](const std::vector<VectorField>& f, const Vec& lo, const Vec& hi) {
        std::uniform_real_distribution<double> ud(0.0, 1.0);
        for (int s = 0; s < 100; ++s) {
            Vec x(lo.size());
            for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = lo(i) + ud(rng) * (hi(i) - lo(i));
            for (std::size_t a = 0; a < f.size(); ++a)
                for (std::size_t b = 0; b < f.size(); ++b) {
                    if (a == b) continue;
                    const Vec xy = lie_bracket(f[a], f[b], x), yx = lie_bracket(f[b], f[a], x);
                    worst_anti = std::max(worst_anti, (xy + yx).norm() / std::max(xy.norm(), 1e-300));
                }
            const std::vector<BracketWord> jac{BracketWord::parse("[f1,[f2,f3]]"), BracketWord::parse("[f2,[f3,f1]]"),
                                               BracketWord::parse("[f3,[f1,f2]]")};
            Vec sum = Vec::Zero(x.size());
            double scale = 0.0;
            for (const auto& w : jac) {
                const Vec v = eval_bracket_word(w, f, x);
                sum += v;
                scale += v.norm();
            }
            worst_jacobi = std::max(worst_jacobi, sum.norm() / std::max(scale, 1e-300));
        }
    };
    const auto c2 = build_cstr2();
    const auto s2 = SwitchingSchedule::symmetric_bang_bang(c2, 1.0);
    auto f2 = segment_fields(c2, s2);
    check_fields({c2.drift, f2[0], f2[1]}, v2(-0.5, -0.05), v2(0.5, 0.05));
    const auto c3 = build_cstr3();
    const auto s3 = SwitchingSchedule::symmetric_bang_bang(c3, 1.0);
    auto f3 = segment_fields(c3, s3);
    check_fields({c3.drift, f3[0], f3[1]}, v3(0.1, 0.3, 320.0), v3(0.6, 0.9, 400.0));

    std::normal_distribution<double> nd;
    for (int trial = 0; trial < 20; ++trial) {
        Mat a(3, 3), b(3, 3);
        for (int i = 0; i < 9; ++i) {
            a.data()[i] = nd(rng);
            b.data()[i] = nd(rng);
        }
        Vec x(3);
        for (int i = 0; i < 3; ++i) x(i) = nd(rng);
        const std::vector<VectorField> lin{linear_field(a), linear_field(b)};
        const auto com = [](const Mat& p, const Mat& q) -> Mat { return q * p - p * q; };
        const std::vector<std::pair<const char*, Mat>> cases{
            {"[f1,f2]", com(a, b)}, {"[f1,[f1,f2]]", com(a, com(a, b))}, {"[f2,[f1,f2]]", com(b, com(a, b))},
            {"[f2,[f1,[f1,f2]]]", com(b, com(a, com(a, b)))}};
        for (const auto& [word, mat] : cases) {
            const Vec got = eval_bracket_word(BracketWord::parse(word), lin, x);
            const Vec want = mat * x;
            worst_linear = std::max(worst_linear, (got - want).norm() / std::max(want.norm(), 1e-300));
        }
    }
    const bool ok = worst_anti <= 1e-10 && worst_jacobi <= 1e-10 && worst_linear <= 1e-12;
    return {ok, "antisymmetry " + fmt(worst_anti) + ", Jacobi " + fmt(worst_jacobi) + " (tol 1e-10); linear words " + fmt(worst_linear) +
                    " (tol 1e-12)"};
}

Outcome criterion_10()
{
    const auto sys = build_cstr3();
    const auto sched = SwitchingSchedule::symmetric_bang_bang(sys, 1.0);
    const auto f4 = truncated_field(sys, sched, 4);
    const auto eq = find_equilibrium(f4, kCstr3SteadyGuess);
    const auto shoot = solve_shooting(sys, sched, eq.x_star);
    if (!shoot.converged) return {false, "no periodic orbit: " + shoot.message};
    const auto tr = attractivity_probe(sys, sched, shoot.x_star, {v3(0.0, 0.0, 350.0)}, 20, reference_metric());
    const auto& d = tr.front().metric_distances;
    bool monotone = true;
    for (int k = 5; k < 20; ++k) monotone = monotone && d[std::size_t(k) + 1] <= d[std::size_t(k)];
    const bool ok = monotone && d[20] < 1e-3;
    return {ok, std::string("metric distance decreasing over periods 5-20: ") + (monotone ? "yes" : "no") + ", d(5) = " + fmt(d[5]) +
                    ", d(20) = " + fmt(d[20]) + " (tol 1e-3)"};
}

} // namespace

int main(int argc, char** argv)
{
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"table of truncated equilibria", criterion_1}, {"shooting fixed point", criterion_2},
        {"3D equilibrium of F~4", criterion_3},        {"Lyapunov metric", criterion_4},
        {"contraction certificate", criterion_5},      {"divergence scan", criterion_6},
        {"series cross-method oracle", criterion_7},   {"order of accuracy", criterion_8},
        {"bracket calculus properties", criterion_9},  {"attraction to the periodic orbit", criterion_10},
    };
    std::vector<int> selected;
    for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));
    if (selected.empty())
        for (int k = 1; k <= int(criteria.size()); ++k) selected.push_back(k);
    int failures = 0;
    for (int k : selected) {
        if (k < 1 || k > int(criteria.size())) {
            std::cout << "FAIL criterion " << k << ": no such criterion\n";
            ++failures;
            continue;
        }
        Outcome o;
        try {
            o = criteria[std::size_t(k - 1)].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << k << " (" << criteria[std::size_t(k - 1)].first << "): " << o.detail
                  << std::endl;
        failures += !o.pass;
    }
    return failures == 0 ? 0 : 1;
}
