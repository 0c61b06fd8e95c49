#pragma once

// Sampled certificates: divergence scans, Lyapunov metrics, contraction checks and attraction probes.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <exception>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/LU>

#include "error.hpp"
#include "flow.hpp"
#include "io.hpp"
#include "linalg.hpp"
#include "system.hpp"
#include "vector_field.hpp"

namespace bchd_orbit {

/// Closed axis-aligned box sampled on a tensor grid that includes both end points.
struct BoxRegion {
    Vec lower;
    Vec upper;
    std::vector<int> grid;

    /// |x_i - c_i| <= delta_i * |c_i| around a centre point.
    static BoxRegion around(const Vec& centre, const Vec& delta, std::vector<int> grid)
    {
        require_size(delta, centre.size(), "BoxRegion::around");
        const Vec half = delta.cwiseProduct(centre.cwiseAbs());
        return {centre - half, centre + half, std::move(grid)};
    }

    static BoxRegion uniform(const Vec& lower, const Vec& upper, int per_axis)
    {
        return {lower, upper, std::vector<int>(std::size_t(lower.size()), per_axis)};
    }

    int dim() const { return int(lower.size()); }

    void validate() const
    {
        if (lower.size() == 0) throw InvalidArgument("BoxRegion: empty region");
        if (upper.size() != lower.size() || grid.size() != std::size_t(lower.size()))
            throw DimensionError("BoxRegion: lower, upper and grid sizes differ");
        for (Eigen::Index i = 0; i < lower.size(); ++i) {
            if (!std::isfinite(lower(i)) || !std::isfinite(upper(i)))
                throw InvalidArgument("BoxRegion: bounds must be finite");
            if (!(lower(i) < upper(i))) throw InvalidArgument("BoxRegion: lower must be below upper on every axis");
            if (grid[std::size_t(i)] < 2) throw InvalidArgument("BoxRegion: grid counts must be >= 2");
        }
    }

    std::size_t sample_count() const
    {
        std::size_t c = 1;
        for (int g : grid) c *= std::size_t(g);
        return c;
    }

    /// Sample `index` in row-major order, last axis fastest.
    Vec point(std::size_t index) const
    {
        Vec x(lower.size());
        for (Eigen::Index i = lower.size() - 1; i >= 0; --i) {
            const auto g = std::size_t(grid[std::size_t(i)]);
            const auto k = index % g;
            index /= g;
            x(i) = k + 1 == g ? upper(i) : lower(i) + (upper(i) - lower(i)) * double(k) / double(g - 1);
        }
        return x;
    }

    /// Same box with every grid count doubled minus one, so the old samples are kept.
    BoxRegion refined() const
    {
        BoxRegion r = *this;
        for (int& g : r.grid) g = 2 * g - 1;
        return r;
    }

    std::string describe() const
    {
        std::string g;
        for (std::size_t i = 0; i < grid.size(); ++i) g += (i ? "x" : "") + std::to_string(grid[i]);
        return "lower=" + format_vector(lower, ";") + " upper=" + format_vector(upper, ";") + " grid=" + g;
    }

    bool operator==(const BoxRegion&) const = default;
};

namespace detail {

inline int resolve_threads(int threads)
{
    if (threads > 0) return threads;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : int(hw);
}

/// Runs fn(i) for i in [0, count) over contiguous chunks; the first exception is rethrown after joining.
template <class Fn>
void parallel_for(std::size_t count, int threads, Fn&& fn)
{
    const std::size_t t = std::min<std::size_t>(std::size_t(resolve_threads(threads)), std::max<std::size_t>(count, 1));
    if (t <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::exception_ptr> errors(t);
    std::vector<std::thread> pool;
    pool.reserve(t);
    for (std::size_t w = 0; w < t; ++w) {
        pool.emplace_back([&, w] {
            const std::size_t begin = count * w / t;
            const std::size_t end = count * (w + 1) / t;
            try {
                for (std::size_t i = begin; i < end; ++i) fn(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

/// Sample failures above this fraction void a scan.
constexpr double kMaxFailureFraction = 1e-3;

} // namespace detail

/// Trace of the jet Jacobian of F at x.
inline double divergence(const VectorField& field, const Vec& x)
{
    require_size(x, field.dim(), "divergence");
    if (!field.in_domain(x)) throw DomainError("divergence: point outside the field domain");
    return field.jacobian(x).trace();
}

struct DulacOptions {
    int threads = 0;
    /// |div| at or below this counts as zero.
    double zero_tol = 1e-12;
    bool keep_samples = false;
};

struct DulacReport {
    std::string field;
    BoxRegion region;
    /// +1 or -1 when the sign is uniform, 0 otherwise.
    int rho_sign = 0;
    bool sign_uniform = false;
    /// Every evaluated sample has |div| <= zero_tol: the scan cannot decide.
    bool identically_zero = false;
    double min_abs_divergence = std::numeric_limits<double>::quiet_NaN();
    double min_divergence = std::numeric_limits<double>::quiet_NaN();
    double max_divergence = std::numeric_limits<double>::quiet_NaN();
    std::size_t samples_total = 0;
    std::size_t domain_failures = 0;
    bool failures_excluded = false;
    std::string warning;
    /// Divergence per grid sample (NaN on failure) when requested.
    std::vector<double> samples;

    bool inconclusive() const { return !sign_uniform; }

    std::string status() const
    {
        if (domain_failures > 0 && !failures_excluded) return "domain-failures";
        if (sign_uniform) return rho_sign < 0 ? "uniform-negative" : "uniform-positive";
        if (identically_zero) return "identically-zero";
        return "mixed-sign";
    }

    std::string to_text() const
    {
        std::ostringstream os;
        os << "field=" << field << '\n'
           << "region=" << region.describe() << '\n'
           << "status=" << status() << '\n'
           << "sign_uniform=" << (sign_uniform ? "true" : "false") << '\n'
           << "rho_sign=" << rho_sign << '\n'
           << "identically_zero=" << (identically_zero ? "true" : "false") << '\n'
           << "min_abs_divergence=" << format_double(min_abs_divergence) << '\n'
           << "min_divergence=" << format_double(min_divergence) << '\n'
           << "max_divergence=" << format_double(max_divergence) << '\n'
           << "samples_total=" << samples_total << '\n'
           << "domain_failures=" << domain_failures << '\n'
           << "failures_excluded=" << (failures_excluded ? "true" : "false") << '\n'
           << "verification=sampled\n";
        if (!warning.empty()) os << "warning=" << warning << '\n';
        return os.str();
    }

    static std::string csv_header()
    {
        return "field,status,sign_uniform,rho_sign,min_abs_divergence,min_divergence,max_divergence,samples_total,domain_failures";
    }

    std::string csv_row() const
    {
        std::ostringstream os;
        os << csv_field(field) << ',' << status() << ',' << (sign_uniform ? "true" : "false") << ',' << rho_sign << ','
           << format_double(min_abs_divergence) << ',' << format_double(min_divergence) << ','
           << format_double(max_divergence) << ',' << samples_total << ',' << domain_failures;
        return os.str();
    }

    /// x1..xn,divergence per grid sample; requires keep_samples.
    std::string samples_csv() const
    {
        std::ostringstream os;
        for (int i = 0; i < region.dim(); ++i) os << 'x' << i + 1 << ',';
        os << "divergence\n";
        for (std::size_t k = 0; k < samples.size(); ++k)
            os << format_vector(region.point(k)) << ',' << format_double(samples[k]) << '\n';
        return os.str();
    }
};

/// Divergence of F on every grid sample; a uniform nonzero sign rules out closed orbits at sampling resolution.
inline DulacReport dulac_scan(const VectorField& field, const BoxRegion& region, const DulacOptions& opts = {})
{
    region.validate();
    if (region.dim() != field.dim()) throw DimensionError("dulac_scan: region and field dimensions differ");
    DulacReport rep;
    rep.field = field.name();
    rep.region = region;
    if (field.dim() != 2) rep.warning = "Bendixson-Dulac applies to planar systems; scan is informational";
    const std::size_t count = region.sample_count();
    rep.samples_total = count;
    std::vector<double> div(count);
    detail::parallel_for(count, opts.threads, [&](std::size_t i) {
        const Vec x = region.point(i);
        double d = std::numeric_limits<double>::quiet_NaN();
        if (field.in_domain(x)) {
            try {
                d = field.jacobian(x).trace();
            } catch (const DomainError&) {
            }
        }
        div[i] = d;
    });
    std::size_t pos = 0, neg = 0, zero = 0;
    double min_abs = std::numeric_limits<double>::infinity();
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (double d : div) {
        if (!std::isfinite(d)) {
            ++rep.domain_failures;
            continue;
        }
        min_abs = std::min(min_abs, std::abs(d));
        lo = std::min(lo, d);
        hi = std::max(hi, d);
        if (std::abs(d) <= opts.zero_tol) ++zero;
        else if (d > 0.0) ++pos;
        else ++neg;
    }
    const std::size_t evaluated = count - rep.domain_failures;
    rep.failures_excluded = double(rep.domain_failures) < detail::kMaxFailureFraction * double(count);
    if (evaluated > 0) {
        rep.min_abs_divergence = min_abs;
        rep.min_divergence = lo;
        rep.max_divergence = hi;
    }
    rep.identically_zero = evaluated > 0 && zero == evaluated;
    if (rep.failures_excluded && evaluated > 0 && zero == 0 && (pos == 0 || neg == 0)) {
        rep.sign_uniform = true;
        rep.rho_sign = neg > 0 ? -1 : 1;
    }
    if (opts.keep_samples) rep.samples = std::move(div);
    return rep;
}

/// ||M A + A^T M + Q||_F.
inline double lyapunov_residual(const Mat& a, const Mat& q, const Mat& m)
{
    return (m * a + a.transpose() * m + q).norm();
}

/// Solves M A + A^T M = -Q for Hurwitz A by Kronecker vectorization.
inline Mat solve_lyapunov(const Mat& a, const Mat& q)
{
    if (a.rows() != a.cols()) throw DimensionError("solve_lyapunov: A not square");
    if (q.rows() != a.rows() || q.cols() != a.cols()) throw DimensionError("solve_lyapunov: Q shape differs from A");
    const int n = int(a.rows());
    if (n < 1 || n > 8) throw UnsupportedError("solve_lyapunov: dimension must be between 1 and 8");
    if (!a.allFinite() || !q.allFinite()) throw DomainError("solve_lyapunov: non-finite input");
    if (!is_symmetric_positive_definite(q)) throw InvalidArgument("solve_lyapunov: Q must be symmetric positive definite");
    if (!is_hurwitz(a)) throw InvalidArgument("solve_lyapunov: A is not Hurwitz");
    const Mat id = Mat::Identity(n, n);
    const Mat at = a.transpose();
    Mat k(n * n, n * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) k.block(i * n, j * n, n, n) = at(i, j) * id + (i == j ? at : Mat::Zero(n, n));
    const double cond = condition_number(k);
    if (!(cond < 1e14)) throw DomainError("solve_lyapunov: ill-conditioned Kronecker system (condition " + format_double(cond) + ")");
    const auto lu = k.fullPivLu();
    const Vec rhs = -Eigen::Map<const Vec>(q.data(), n * n);
    Vec v = lu.solve(rhs);
    v += lu.solve(rhs - k * v);
    Mat m = Eigen::Map<const Mat>(v.data(), n, n);
    m = 0.5 * (m + m.transpose()).eval();
    return m;
}

struct ContractionCertificate {
    Mat metric_M;
    double beta = 0.0;
    BoxRegion region;
    /// Largest eigenvalue of M J + J^T M + beta I over samples and control vertices.
    double worst_eigenvalue = std::numeric_limits<double>::quiet_NaN();
    Vec worst_point;
    Vec worst_control;
    std::size_t samples_checked = 0;
    /// Control vertices per sample; 0 when the Jacobian does not depend on u.
    int vertex_controls_checked = 0;
    bool u_independent = false;
    std::size_t domain_failures = 0;
    bool failures_excluded = false;
    std::vector<double> samples;

    /// Largest beta for which the same scan certifies.
    double max_beta() const { return beta - worst_eigenvalue; }

    bool valid() const { return failures_excluded && std::isfinite(worst_eigenvalue) && worst_eigenvalue <= 0.0; }

    std::string to_text() const
    {
        std::ostringstream os;
        os << "valid=" << (valid() ? "true" : "false") << '\n'
           << "verification=sampled\n"
           << "beta=" << format_double(beta) << '\n'
           << "worst_eigenvalue=" << format_double(worst_eigenvalue) << '\n'
           << "max_beta=" << format_double(max_beta()) << '\n'
           << "worst_point=" << format_vector(worst_point) << '\n'
           << "worst_control=" << format_vector(worst_control) << '\n'
           << "metric_M=" << format_matrix(metric_M) << '\n'
           << "region=" << region.describe() << '\n'
           << "samples_checked=" << samples_checked << '\n'
           << "vertex_controls_checked=" << vertex_controls_checked << '\n'
           << "u_independent=" << (u_independent ? "true" : "false") << '\n'
           << "domain_failures=" << domain_failures << '\n'
           << "failures_excluded=" << (failures_excluded ? "true" : "false") << '\n';
        return os.str();
    }

    static std::string csv_header()
    {
        return "valid,beta,worst_eigenvalue,max_beta,samples_checked,vertex_controls_checked,u_independent,domain_failures";
    }

    std::string csv_row() const
    {
        std::ostringstream os;
        os << (valid() ? "true" : "false") << ',' << format_double(beta) << ',' << format_double(worst_eigenvalue) << ','
           << format_double(max_beta()) << ',' << samples_checked << ',' << vertex_controls_checked << ','
           << (u_independent ? "true" : "false") << ',' << domain_failures;
        return os.str();
    }

    /// x1..xn,max_eigenvalue per grid sample; requires keep_samples.
    std::string samples_csv() const
    {
        std::ostringstream os;
        for (int i = 0; i < region.dim(); ++i) os << 'x' << i + 1 << ',';
        os << "max_eigenvalue\n";
        for (std::size_t k = 0; k < samples.size(); ++k)
            os << format_vector(region.point(k)) << ',' << format_double(samples[k]) << '\n';
        return os.str();
    }
};

struct ContractionOptions {
    int threads = 0;
    bool keep_samples = false;
};

/// Largest eigenvalue of M J(x,u) + J(x,u)^T M + beta I over the grid and the control-box vertices.
inline ContractionCertificate contraction_check(const ControlAffineSystem& system, const Mat& metric, double beta,
                                                const BoxRegion& region, const ContractionOptions& opts = {})
{
    system.validate();
    region.validate();
    const int n = system.n();
    if (region.dim() != n) throw DimensionError("contraction_check: region and system dimensions differ");
    if (metric.rows() != n || metric.cols() != n) throw DimensionError("contraction_check: metric shape differs from the state");
    if (!is_symmetric_positive_definite(metric)) throw InvalidArgument("contraction_check: M must be symmetric positive definite");
    if (!(beta > 0.0) || !std::isfinite(beta)) throw InvalidArgument("contraction_check: beta must be positive");

    ContractionCertificate cert;
    cert.metric_M = metric;
    cert.beta = beta;
    cert.region = region;
    cert.u_independent = system.constant_inputs();
    const std::vector<Vec> vertices = cert.u_independent ? std::vector<Vec>{Vec::Zero(system.m())} : system.control_vertices();
    cert.vertex_controls_checked = cert.u_independent ? 0 : int(vertices.size());
    const std::size_t count = region.sample_count();
    cert.samples_checked = count;
    std::vector<double> worst(count);
    std::vector<int> worst_vertex(count, 0);
    const Mat shift = beta * Mat::Identity(n, n);
    detail::parallel_for(count, opts.threads, [&](std::size_t i) {
        const Vec x = region.point(i);
        double w = std::numeric_limits<double>::quiet_NaN();
        if (system.domain.contains(x)) {
            try {
                const Mat j0 = system.drift.jacobian(x);
                std::vector<Mat> jg;
                if (!cert.u_independent)
                    for (const auto& g : system.inputs) jg.push_back(g.jacobian(x));
                for (std::size_t v = 0; v < vertices.size(); ++v) {
                    Mat j = j0;
                    for (std::size_t k = 0; k < jg.size(); ++k) j += vertices[v](Eigen::Index(k)) * jg[k];
                    if (!j.allFinite()) throw DomainError("non-finite Jacobian");
                    const double e = max_symmetric_eigenvalue(metric * j + j.transpose() * metric + shift);
                    if (!(e <= w)) {
                        w = e;
                        worst_vertex[i] = int(v);
                    }
                }
            } catch (const DomainError&) {
                w = std::numeric_limits<double>::quiet_NaN();
            }
        }
        worst[i] = w;
    });
    double best = -std::numeric_limits<double>::infinity();
    std::size_t at = count;
    for (std::size_t i = 0; i < count; ++i) {
        if (!std::isfinite(worst[i])) {
            ++cert.domain_failures;
            continue;
        }
        if (worst[i] > best) {
            best = worst[i];
            at = i;
        }
    }
    cert.failures_excluded = double(cert.domain_failures) < detail::kMaxFailureFraction * double(count);
    if (at < count) {
        cert.worst_eigenvalue = best;
        cert.worst_point = region.point(at);
        cert.worst_control = vertices[std::size_t(worst_vertex[at])];
    }
    if (opts.keep_samples) cert.samples = std::move(worst);
    return cert;
}

struct AttractivityTrace {
    Vec x0;
    /// ||x(k tau) - x*|| for k = 0..n_periods.
    std::vector<double> distances;
    /// sqrt((x(k tau) - x*)^T M (x(k tau) - x*)) when a metric is supplied.
    std::vector<double> metric_distances;

    /// distances[k + 1] / distances[k].
    std::vector<double> decay_ratios() const
    {
        std::vector<double> r;
        for (std::size_t k = 0; k + 1 < distances.size(); ++k) r.push_back(distances[k + 1] / distances[k]);
        return r;
    }
};

/// Distance of the period samples x(k tau) to the orbit point x* for each start.
inline std::vector<AttractivityTrace> attractivity_probe(const ControlAffineSystem& system, const SwitchingSchedule& schedule,
                                                         const Vec& x_star, const std::vector<Vec>& starts, int n_periods,
                                                         const std::optional<Mat>& metric = std::nullopt,
                                                         const ToleranceConfig& tol = {})
{
    if (n_periods < 1) throw InvalidArgument("attractivity_probe: n_periods must be >= 1");
    require_size(x_star, system.n(), "attractivity_probe");
    if (metric && (metric->rows() != system.n() || metric->cols() != system.n()))
        throw DimensionError("attractivity_probe: metric shape differs from the state");
    const PoincareMap map(system, schedule, tol);
    std::vector<AttractivityTrace> out;
    for (const auto& x0 : starts) {
        require_size(x0, system.n(), "attractivity_probe");
        AttractivityTrace tr;
        tr.x0 = x0;
        Vec x = x0;
        for (int k = 0;; ++k) {
            tr.distances.push_back((x - x_star).norm());
            if (metric) tr.metric_distances.push_back(metric_distance(*metric, x, x_star));
            if (k == n_periods) break;
            x = map(x);
        }
        out.push_back(std::move(tr));
    }
    return out;
}

/// start,period,distance[,metric_distance] rows.
inline std::string attractivity_csv(const std::vector<AttractivityTrace>& traces)
{
    const bool metric = !traces.empty() && !traces.front().metric_distances.empty();
    std::ostringstream os;
    os << "start,period,distance" << (metric ? ",metric_distance" : "") << '\n';
    for (std::size_t s = 0; s < traces.size(); ++s)
        for (std::size_t k = 0; k < traces[s].distances.size(); ++k) {
            os << s + 1 << ',' << k << ',' << format_double(traces[s].distances[k]);
            if (metric) os << ',' << format_double(traces[s].metric_distances[k]);
            os << '\n';
        }
    return os.str();
}

} // namespace bchd_orbit
