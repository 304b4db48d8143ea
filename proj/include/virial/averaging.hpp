#pragma once

#include <virial/integrate.hpp>

#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace virial {

enum class AverageMode { Cesaro, Periodic };

struct AverageResult {
    double value = 0;
    double half_value = 0;
    bool converged = false;
    bool bound_warning = false;
    double max_abs = 0;
    std::optional<double> boundary_term;  // filled when paired with a virial function
};

namespace detail {

inline double trapezoid(const std::vector<double>& t, const std::vector<double>& f,
                        size_t count) {
    double acc = 0;
    for (size_t k = 0; k + 1 < count; ++k)
        acc += 0.5 * (t[k + 1] - t[k]) * (f[k] + f[k + 1]);
    return acc;
}

// Integral of f over [t0, tstop] where tstop lies inside the sample range;
// the tail cell uses the supplied endpoint value f_stop.
inline double trapezoid_to(const std::vector<double>& t, const std::vector<double>& f,
                           double tstop, double f_stop) {
    double acc = 0;
    size_t k = 0;
    for (; k + 1 < t.size() && t[k + 1] <= tstop; ++k)
        acc += 0.5 * (t[k + 1] - t[k]) * (f[k] + f[k + 1]);
    if (k < t.size() && t[k] < tstop) acc += 0.5 * (tstop - t[k]) * (f[k] + f_stop);
    return acc;
}

// Safe-side bound on the composite trapezoid error from second differences.
inline double trapezoid_error_bound(const std::vector<double>& t,
                                    const std::vector<double>& f) {
    double acc = 0;
    for (size_t k = 1; k + 1 < f.size(); ++k) {
        const double h = 0.5 * (t[k + 1] - t[k - 1]);
        acc += h / 12.0 * std::abs(f[k + 1] - 2 * f[k] + f[k - 1]);
    }
    return acc;
}

// Windowed boundedness monitor: strictly growing maxima of |f| over the
// three thirds of the run flag a likely unbounded observable.
inline bool growth_warning(const std::vector<double>& t, const std::vector<double>& f) {
    if (f.size() < 6) return false;
    const double t0 = t.front(), span = t.back() - t.front();
    double w[3] = {0, 0, 0};
    for (size_t k = 0; k < f.size(); ++k) {
        int bucket = static_cast<int>(3.0 * (t[k] - t0) / span);
        bucket = std::min(bucket, 2);
        w[bucket] = std::max(w[bucket], std::abs(f[k]));
    }
    const double margin = 1.01;
    return w[1] > w[0] * margin && w[2] > w[1] * margin;
}

}  // namespace detail

struct AverageOptions {
    AverageMode mode = AverageMode::Cesaro;
    double convergence_tol = 1e-3;
    double period = 0;  // for Periodic mode
};

// Time average of F along the trajectory by trapezoid quadrature on the
// dense samples. Cesaro mode also averages the first half of the window and
// compares (the doubling test); periodic mode integrates exactly one period
// starting at t = 0.
inline AverageResult time_average(const std::function<double(const Vec&)>& f,
                                  const Trajectory& traj, const AverageOptions& opts = {}) {
    if (traj.size() < 2) throw Error("trajectory has too few samples to average");
    std::vector<double> fs(traj.size());
    for (size_t k = 0; k < traj.size(); ++k) fs[k] = f(traj.states[k]);

    AverageResult res;
    for (double v : fs) res.max_abs = std::max(res.max_abs, std::abs(v));
    res.bound_warning = detail::growth_warning(traj.times, fs);

    double window = traj.span();
    if (opts.mode == AverageMode::Periodic) {
        if (!(opts.period > 0) || opts.period > traj.span() * (1 + 1e-12))
            throw PeriodExceedsSpan("period " + std::to_string(opts.period) +
                                    " not covered by trajectory span " +
                                    std::to_string(traj.span()));
        window = opts.period;
    }
    // quadrature relative to the first sample, so constants average exactly
    const double base = fs[0];
    std::vector<double> rel(fs.size());
    for (size_t k = 0; k < fs.size(); ++k) rel[k] = fs[k] - base;
    const double t0 = traj.times.front();
    const double f_end = f(traj.interpolate(t0 + window)) - base;
    const double f_half = f(traj.interpolate(t0 + window / 2)) - base;
    res.value = base + detail::trapezoid_to(traj.times, rel, t0 + window, f_end) / window;
    res.half_value =
        base + detail::trapezoid_to(traj.times, rel, t0 + window / 2, f_half) / (window / 2);
    res.converged =
        std::abs(res.value - res.half_value) <= opts.convergence_tol * (1 + std::abs(res.value));
    return res;
}

// Running Cesaro average ( T_k, (1/T_k) int_0^{T_k} F dt ) for convergence plots.
inline std::vector<std::pair<double, double>> running_average(
    const std::function<double(const Vec&)>& f, const Trajectory& traj) {
    std::vector<std::pair<double, double>> out;
    if (traj.size() < 2) return out;
    out.reserve(traj.size() - 1);
    double acc = 0;
    double prev = f(traj.states[0]);
    const double t0 = traj.times.front();
    for (size_t k = 1; k < traj.size(); ++k) {
        const double cur = f(traj.states[k]);
        acc += 0.5 * (traj.times[k] - traj.times[k - 1]) * (prev + cur);
        out.emplace_back(traj.times[k] - t0, acc / (traj.times[k] - t0));
        prev = cur;
    }
    return out;
}

// First-return period: the earliest time after leaving the eps-ball of the
// initial state at which the trajectory re-enters it, refined on the dense
// interpolant. Components with a nonzero entry in `wrap` are treated as
// angles with that period when measuring the return distance.
inline std::optional<double> detect_period(const Trajectory& traj, double eps,
                                           const Vec& wrap = Vec()) {
    if (traj.size() < 4) return std::nullopt;
    const Vec x0 = traj.states.front();

    auto diff = [&](const Vec& x) {
        Vec d = x - x0;
        for (int i = 0; i < wrap.size() && i < d.size(); ++i)
            if (wrap[i] > 0) d[i] -= wrap[i] * std::round(d[i] / wrap[i]);
        return d;
    };
    auto dist = [&](const Vec& x) { return diff(x).norm(); };

    // skip the initial neighbourhood
    size_t depart = 0;
    while (depart < traj.size() && dist(traj.states[depart]) <= 2 * eps) ++depart;
    if (depart >= traj.size()) return std::nullopt;

    for (size_t k = depart + 1; k + 1 < traj.size(); ++k) {
        const double dm = dist(traj.states[k - 1]);
        const double dc = dist(traj.states[k]);
        const double dp = dist(traj.states[k + 1]);
        if (!(dc <= eps && dc <= dm && dc <= dp)) continue;

        // phi(t) = 0.5 d/dt |x(t)-x0|^2 changes sign across the minimum
        auto phi = [&](double t) { return diff(traj.interpolate(t)).dot(traj.derivative(t)); };
        double lo = traj.times[k - 1], hi = traj.times[k + 1];
        double flo = phi(lo), fhi = phi(hi);
        double best = traj.times[k];
        if (flo < 0 && fhi > 0) {
            for (int it = 0; it < 80; ++it) {
                const double mid = 0.5 * (lo + hi);
                const double fm = phi(mid);
                if (fm < 0) lo = mid, flo = fm;
                else hi = mid, fhi = fm;
            }
            best = 0.5 * (lo + hi);
        }
        return best - traj.times.front();
    }
    return std::nullopt;
}

struct VirialObservable {
    std::string name;
    std::function<double(const Vec&)> value;      // G on the packed state
    std::function<double(const Vec&)> integrand;  // dG/dt along the flow
};

struct VirialEntry {
    std::string name;
    AverageResult cesaro;
    std::optional<double> periodic_average;
    double boundary_term = 0;  // (G(end) - G(start)) / T
    double residual = 0;       // |cesaro average - boundary term|
    double residual_tol = 0;   // quadrature + integration error allowance
    double max_abs_g = 0;
    bool bound_warning = false;
};

struct VirialReport {
    std::vector<VirialEntry> entries;
    std::optional<double> period;
};

struct ReportOptions {
    double convergence_tol = 1e-3;
    std::optional<double> period;
    double rtol = 1e-10;  // integrator tolerances, for the residual allowance
    double atol = 1e-12;
};

inline VirialEntry make_virial_entry(const VirialObservable& obs, const Trajectory& traj,
                                     const ReportOptions& opts) {
    VirialEntry e;
    e.name = obs.name;
    e.cesaro = time_average(obs.integrand, traj,
                            {AverageMode::Cesaro, opts.convergence_tol, 0});
    if (opts.period && *opts.period > 0 && *opts.period <= traj.span())
        e.periodic_average =
            time_average(obs.integrand, traj,
                         {AverageMode::Periodic, opts.convergence_tol, *opts.period})
                .value;

    std::vector<double> gs(traj.size()), is(traj.size());
    for (size_t k = 0; k < traj.size(); ++k) {
        gs[k] = obs.value(traj.states[k]);
        is[k] = obs.integrand(traj.states[k]);
    }
    const double span = traj.span();
    e.boundary_term = (gs.back() - gs.front()) / span;
    e.cesaro.boundary_term = e.boundary_term;
    e.residual = std::abs(e.cesaro.value - e.boundary_term);
    double max_abs_i = 0;
    for (double v : is) max_abs_i = std::max(max_abs_i, std::abs(v));
    e.residual_tol = detail::trapezoid_error_bound(traj.times, is) / span +
                     opts.rtol * (1 + max_abs_i) + opts.atol;
    for (double v : gs) e.max_abs_g = std::max(e.max_abs_g, std::abs(v));
    e.bound_warning = detail::growth_warning(traj.times, gs);
    return e;
}

inline VirialReport virial_report(const std::vector<VirialObservable>& observables,
                                  const Trajectory& traj, const ReportOptions& opts = {}) {
    VirialReport report;
    report.period = opts.period;
    report.entries.reserve(observables.size());
    for (const auto& obs : observables)
        report.entries.push_back(make_virial_entry(obs, traj, opts));
    return report;
}

}  // namespace virial
