#pragma once

// Flows of autonomous fields and of the switched system.
//
// Integration uses the Dormand-Prince 5(4) pair with a PI step-size controller.
// Switching instants are segment boundaries known in advance, so each segment
// is integrated separately and the endpoints are chained.

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "error.hpp"
#include "io.hpp"
#include "linalg.hpp"
#include "system.hpp"
#include "vector_field.hpp"

namespace bchd_orbit {

struct ToleranceConfig {
    double rtol = 1e-10;
    double atol = 1e-12;
    /// Absolute cap on the step size.
    double max_step = std::numeric_limits<double>::infinity();
    /// Cap on the step size as a fraction of the period (or of the horizon for autonomous flows).
    double max_step_fraction = 1.0 / 50.0;
    /// Zero selects the starting step automatically.
    double initial_step = 0.0;
    long max_steps = 5'000'000;

    void validate() const
    {
        if (!(rtol > 0.0) || !(atol >= 0.0)) throw InvalidArgument("ToleranceConfig: rtol > 0 and atol >= 0 required");
        if (!(max_step > 0.0) || !(max_step_fraction > 0.0))
            throw InvalidArgument("ToleranceConfig: step caps must be positive");
        if (initial_step < 0.0 || max_steps < 1) throw InvalidArgument("ToleranceConfig: invalid initial step or step budget");
    }

    bool operator==(const ToleranceConfig&) const = default;
};

/// Raised when integration cannot continue; carries the last accepted state.
class IntegrationError : public Error {
public:
    IntegrationError(const std::string& what, Vec last_state, double last_time, int segment = 0)
        : Error(what), last_state_(std::move(last_state)), last_time_(last_time), segment_(segment)
    {
    }

    const Vec& last_state() const { return last_state_; }
    double last_time() const { return last_time_; }
    /// 1-based switching segment, 0 when not applicable.
    int segment() const { return segment_; }

private:
    Vec last_state_;
    double last_time_;
    int segment_;
};

struct Trajectory {
    std::vector<double> t;
    std::vector<Vec> x;
    /// 1-based switching segment of each sample.
    std::vector<int> segment;
    /// Sample indices that end a switching segment.
    std::vector<std::size_t> switch_indices;
    /// Sample indices at t = k tau, k = 0..periods.
    std::vector<std::size_t> period_indices;
    ToleranceConfig tolerances;
    long accepted_steps = 0;
    long rejected_steps = 0;

    std::size_t size() const { return t.size(); }
    bool empty() const { return t.empty(); }
    int dim() const { return x.empty() ? 0 : int(x.front().size()); }
    const Vec& final_state() const { return x.back(); }

    std::vector<Vec> poincare_samples() const
    {
        std::vector<Vec> out;
        for (auto i : period_indices) out.push_back(x[i]);
        return out;
    }

    void push(double time, const Vec& state, int seg)
    {
        t.push_back(time);
        x.push_back(state);
        segment.push_back(seg);
    }

    /// Header `t,x1,...,xn,segment`; floats in shortest round-trip form.
    std::string to_csv() const
    {
        std::ostringstream os;
        os << "t";
        for (int i = 0; i < dim(); ++i) os << ",x" << i + 1;
        os << ",segment\n";
        for (std::size_t k = 0; k < size(); ++k) os << format_double(t[k]) << ',' << format_vector(x[k]) << ',' << segment[k] << '\n';
        return os.str();
    }

    static Trajectory from_csv(const std::string& text)
    {
        std::istringstream is(text);
        std::string line;
        if (!std::getline(is, line) || line.rfind("t,", 0) != 0) throw InvalidArgument("Trajectory::from_csv: missing header");
        const int n = int(std::count(line.begin(), line.end(), ',')) - 1;
        Trajectory tr;
        while (std::getline(is, line)) {
            if (line.empty()) continue;
            std::vector<std::string> cells;
            std::stringstream ls(line);
            std::string cell;
            while (std::getline(ls, cell, ',')) cells.push_back(cell);
            if (int(cells.size()) != n + 2) throw InvalidArgument("Trajectory::from_csv: wrong column count");
            Vec v(n);
            for (int i = 0; i < n; ++i) v(i) = std::stod(cells[std::size_t(i) + 1]);
            const int seg = std::stoi(cells.back());
            if (!tr.segment.empty() && seg != tr.segment.back()) tr.switch_indices.push_back(tr.size() - 1);
            tr.push(std::stod(cells[0]), v, seg);
        }
        return tr;
    }
};

namespace detail {

struct StepStats {
    long accepted = 0;
    long rejected = 0;
};

inline double rms_scaled(const Vec& v, const Vec& a, const Vec& b, const ToleranceConfig& tol)
{
    double s = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        const double sc = tol.atol + tol.rtol * std::max(std::abs(a(i)), std::abs(b(i)));
        const double r = v(i) / sc;
        s += r * r;
    }
    return std::sqrt(s / double(v.size()));
}

inline double initial_step(const VectorField& f, const Vec& x0, const Vec& f0, double hmax, const ToleranceConfig& tol)
{
    const double d0 = rms_scaled(x0, x0, x0, tol);
    const double d1 = rms_scaled(f0, x0, x0, tol);
    double h0 = (d0 < 1e-10 || d1 < 1e-10) ? 1e-6 : 0.01 * d0 / d1;
    h0 = std::min(h0, hmax);
    double d2 = 0.0;
    try {
        const Vec f1 = f(Vec(x0 + h0 * f0));
        d2 = rms_scaled(Vec(f1 - f0), x0, x0, tol) / h0;
    } catch (const DomainError&) {
        return std::min(h0 * 1e-3, hmax);
    }
    const double dm = std::max(d1, d2);
    const double h1 = dm <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dm, 0.2);
    return std::min({100.0 * h0, h1, hmax});
}

/// Integrates from t0 to t1; `stops` (sorted, inside (t0, t1]) are hit exactly.
/// sink(t, x, is_stop) is called after every accepted step.
template <class Sink>
Vec dopri5(const VectorField& f, Vec x, double t0, double t1, double hmax, const ToleranceConfig& tol,
           const std::vector<double>& stops, Sink&& sink, StepStats& stats)
{
    // Dormand-Prince 5(4) tableau
    constexpr double a21 = 1.0 / 5;
    constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784, a76 = 11.0 / 84;
    constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200, e6 = 22.0 / 525,
                     e7 = -1.0 / 40;
    // PI controller constants
    constexpr double safe = 0.9, fac_min = 0.2, fac_max = 10.0, beta = 0.04;
    constexpr double expo1 = 0.2 - beta * 0.75;

    Vec k1;
    try {
        k1 = f(x);
    } catch (const DomainError& e) {
        throw IntegrationError(std::string("initial state outside the domain: ") + e.what(), x, t0);
    }
    double h = tol.initial_step > 0.0 ? std::min(tol.initial_step, hmax) : initial_step(f, x, k1, hmax, tol);
    double t = t0;
    double facold = 1e-4;
    bool rejected_last = false;
    std::size_t next_stop = 0;
    long steps = 0;
    const Eigen::Index n = x.size();
    Vec k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), y(n), xnew(n);

    while (t < t1) {
        if (++steps > tol.max_steps) throw IntegrationError("step budget exhausted", x, t);
        const double target = next_stop < stops.size() ? stops[next_stop] : t1;
        h = std::min(h, hmax);
        bool hit = false;
        if (t + 1.01 * h >= target) {
            h = target - t;
            hit = true;
        }
        const double hmin = 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t));
        if (h < hmin) throw IntegrationError("step size underflow at t = " + format_double(t), x, t);

        double err;
        try {
            y = x + h * a21 * k1;
            k2 = f(y);
            y = x + h * (a31 * k1 + a32 * k2);
            k3 = f(y);
            y = x + h * (a41 * k1 + a42 * k2 + a43 * k3);
            k4 = f(y);
            y = x + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
            k5 = f(y);
            y = x + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
            k6 = f(y);
            xnew = x + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
            k7 = f(xnew);
            const Vec e = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
            err = rms_scaled(e, x, xnew, tol);
            if (!std::isfinite(err)) throw DomainError("non-finite error estimate");
        } catch (const DomainError&) {
            ++stats.rejected;
            h *= 0.25;
            rejected_last = true;
            continue;
        }

        const double fac11 = std::pow(err, expo1);
        if (err <= 1.0) {
            double fac = fac11 / std::pow(facold, beta);
            fac = std::max(1.0 / fac_max, std::min(1.0 / fac_min, fac / safe));
            double hnew = h / fac;
            if (rejected_last) hnew = std::min(hnew, h);
            facold = std::max(err, 1e-4);
            t = hit ? target : t + h;
            x = xnew;
            k1 = k7;
            ++stats.accepted;
            const bool is_stop = hit && next_stop < stops.size();
            if (is_stop) ++next_stop;
            sink(t, x, is_stop);
            rejected_last = false;
            h = hnew;
        } else {
            ++stats.rejected;
            h /= std::min(1.0 / fac_min, fac11 / safe);
            rejected_last = true;
        }
    }
    return x;
}

inline double step_cap(const ToleranceConfig& tol, double horizon)
{
    return std::min(tol.max_step, tol.max_step_fraction * horizon);
}

} // namespace detail

struct IntegrateOptions {
    /// Record every accepted step.
    bool record_steps = true;
    /// When positive, additionally land exactly on this many equally spaced times in (t0, t1].
    int uniform_samples = 0;
    /// Segment label stored with the samples.
    int segment = 1;
    /// Step cap horizon; zero means t1 - t0.
    double horizon = 0.0;
};

/// Adaptive solution of x' = field(x) on [t0, t1]; the last sample is at exactly t1.
inline Trajectory integrate(const VectorField& field, const Vec& x0, double t0, double t1, const ToleranceConfig& tol = {},
                            const IntegrateOptions& opts = {})
{
    tol.validate();
    require_size(x0, field.dim(), "integrate");
    if (!(t1 > t0)) throw InvalidArgument("integrate: t1 must exceed t0");
    if (!field.in_domain(x0)) throw DomainError("integrate: initial state outside the domain of '" + field.name() + "'");
    std::vector<double> stops;
    for (int k = 1; k <= opts.uniform_samples; ++k) stops.push_back(k == opts.uniform_samples ? t1 : t0 + (t1 - t0) * k / opts.uniform_samples);
    Trajectory tr;
    tr.tolerances = tol;
    tr.push(t0, x0, opts.segment);
    detail::StepStats stats;
    const bool all = opts.record_steps;
    const Vec end = detail::dopri5(
        field, x0, t0, t1, detail::step_cap(tol, opts.horizon > 0.0 ? opts.horizon : t1 - t0), tol, stops,
        [&](double t, const Vec& x, bool is_stop) {
            if (all || is_stop || t == t1) tr.push(t, x, opts.segment);
        },
        stats);
    if (tr.t.back() != t1) tr.push(t1, end, opts.segment);
    tr.accepted_steps = stats.accepted;
    tr.rejected_steps = stats.rejected;
    return tr;
}

/// Endpoint of the flow of F from x0 over [0, T].
inline Vec flow_autonomous(const VectorField& field, const Vec& x0, double horizon = 1.0, const ToleranceConfig& tol = {})
{
    tol.validate();
    require_size(x0, field.dim(), "flow_autonomous");
    if (!(horizon > 0.0)) throw InvalidArgument("flow_autonomous: horizon must be positive");
    if (!field.in_domain(x0)) throw DomainError("flow_autonomous: initial state outside the domain");
    detail::StepStats stats;
    return detail::dopri5(field, x0, 0.0, horizon, detail::step_cap(tol, horizon), tol, {}, [](double, const Vec&, bool) {}, stats);
}

/// The period map x0 -> x(tau; x0) of the switched system, with its frozen fields prepared once.
class PoincareMap {
public:
    PoincareMap(const ControlAffineSystem& system, const SwitchingSchedule& schedule, ToleranceConfig tol = {})
        : schedule_(schedule), tol_(tol), domain_(system.domain)
    {
        system.validate();
        schedule.validate(system);
        tol.validate();
        fields_ = segment_fields(system, schedule);
    }

    const SwitchingSchedule& schedule() const { return schedule_; }
    const ToleranceConfig& tolerances() const { return tol_; }
    int dim() const { return fields_.front().dim(); }

    Vec operator()(const Vec& x0) const
    {
        require_size(x0, dim(), "compose_flows");
        if (!domain_.contains(x0)) throw DomainError("compose_flows: initial state outside the domain");
        Vec x = x0;
        detail::StepStats stats;
        for (int k = 0; k < schedule_.segments(); ++k) x = run_segment(k, x, 0.0, nullptr, 0, stats);
        return x;
    }

    /// Full trajectory over n_periods; `samples_per_segment` > 0 adds equally spaced samples.
    Trajectory trajectory(const Vec& x0, int n_periods, int samples_per_segment = 0, bool record_steps = true) const
    {
        require_size(x0, dim(), "simulate_periods");
        if (n_periods < 1) throw InvalidArgument("simulate_periods: n_periods must be >= 1");
        if (!domain_.contains(x0)) throw DomainError("simulate_periods: initial state outside the domain");
        Trajectory tr;
        tr.tolerances = tol_;
        tr.push(0.0, x0, 1);
        tr.period_indices.push_back(0);
        detail::StepStats stats;
        Vec x = x0;
        for (int p = 0; p < n_periods; ++p) {
            const double offset = p * schedule_.tau;
            for (int k = 0; k < schedule_.segments(); ++k) {
                Recorder rec{&tr, record_steps};
                x = run_segment(k, x, offset, &rec, samples_per_segment, stats);
                tr.switch_indices.push_back(tr.size() - 1);
            }
            tr.period_indices.push_back(tr.size() - 1);
        }
        tr.accepted_steps = stats.accepted;
        tr.rejected_steps = stats.rejected;
        return tr;
    }

private:
    struct Recorder {
        Trajectory* tr;
        bool all;
    };

    Vec run_segment(int k, const Vec& x, double offset, Recorder* rec, int samples, detail::StepStats& stats) const
    {
        const double a = offset + schedule_.segment_start(k);
        const double b = k + 1 == schedule_.segments() ? offset + schedule_.tau : offset + schedule_.segment_end(k);
        std::vector<double> stops;
        for (int s = 1; s < samples; ++s) stops.push_back(a + (b - a) * s / samples);
        const double hmax = detail::step_cap(tol_, schedule_.tau);
        try {
            return detail::dopri5(
                fields_[k], x, a, b, hmax, tol_, stops,
                [&](double t, const Vec& y, bool is_stop) {
                    if (rec && (rec->all || is_stop || t == b)) rec->tr->push(t, y, k + 1);
                },
                stats);
        } catch (const IntegrationError& e) {
            throw IntegrationError("segment " + std::to_string(k + 1) + ": " + e.what(), e.last_state(), e.last_time(), k + 1);
        }
    }

    SwitchingSchedule schedule_;
    ToleranceConfig tol_;
    Box domain_;
    std::vector<VectorField> fields_;
};

/// x(tau; x0) under the piecewise-constant schedule.
inline Vec compose_flows(const ControlAffineSystem& system, const SwitchingSchedule& schedule, const Vec& x0,
                         const ToleranceConfig& tol = {})
{
    return PoincareMap(system, schedule, tol)(x0);
}

inline Trajectory simulate_periods(const ControlAffineSystem& system, const SwitchingSchedule& schedule, const Vec& x0,
                                   int n_periods, const ToleranceConfig& tol = {}, int samples_per_segment = 0,
                                   bool record_steps = true)
{
    return PoincareMap(system, schedule, tol).trajectory(x0, n_periods, samples_per_segment, record_steps);
}

} // namespace bchd_orbit
