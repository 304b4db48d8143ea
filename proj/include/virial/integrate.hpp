#pragma once

#include <virial/types.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace virial {

struct IntegratorSettings {
    double rtol = 1e-10;
    double atol = 1e-12;
    double max_step = 0;  // 0 means uncapped
    double t_max = 10.0;
    double dense_dt = 0.01;
};

inline void validate_settings(const IntegratorSettings& cfg) {
    if (!(cfg.rtol > 0) || !(cfg.atol > 0))
        throw InvalidParams("integrator tolerances must be positive");
    if (!(cfg.t_max > 0)) throw InvalidParams("t_max must be positive");
    if (!(cfg.dense_dt > 0) || cfg.dense_dt > cfg.t_max / 100.0)
        throw InvalidParams("dense_dt must be positive and at most t_max/100");
    if (cfg.max_step < 0) throw InvalidParams("max_step must be nonnegative");
}

struct StepStats {
    size_t accepted = 0;
    size_t rejected = 0;
    size_t field_evals = 0;
    double min_step = std::numeric_limits<double>::infinity();
    double max_step = 0;
};

// Densely sampled solution. Derivatives are those of the step interpolant,
// so re-interpolating between adjacent samples reproduces it exactly.
struct Trajectory {
    std::vector<double> times;
    std::vector<Vec> states;
    std::vector<Vec> derivs;
    bool guard_tripped = false;
    StepStats stats;

    size_t size() const { return times.size(); }
    double span() const { return times.empty() ? 0.0 : times.back() - times.front(); }

    size_t segment_index(double t) const {
        if (t <= times.front()) return 0;
        if (t >= times.back()) return times.size() - 2;
        const auto it = std::upper_bound(times.begin(), times.end(), t);
        return static_cast<size_t>(std::max<std::ptrdiff_t>(0, it - times.begin() - 1));
    }

    Vec interpolate(double t) const {
        const size_t k = segment_index(t);
        const double h = times[k + 1] - times[k];
        const double s = (t - times[k]) / h;
        const double s2 = s * s, s3 = s2 * s;
        return (2 * s3 - 3 * s2 + 1) * states[k] + (s3 - 2 * s2 + s) * h * derivs[k] +
               (-2 * s3 + 3 * s2) * states[k + 1] + (s3 - s2) * h * derivs[k + 1];
    }

    Vec derivative(double t) const {
        const size_t k = segment_index(t);
        const double h = times[k + 1] - times[k];
        const double s = (t - times[k]) / h;
        const double s2 = s * s;
        return ((6 * s2 - 6 * s) * states[k] + (3 * s2 - 4 * s + 1) * h * derivs[k] +
                (-6 * s2 + 6 * s) * states[k + 1] + (3 * s2 - 2 * s) * h * derivs[k + 1]) /
               h;
    }
};

namespace detail {

// Dormand-Prince 5(4) coefficients.
struct Dopri5 {
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                            a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                            a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                            b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static constexpr double e1 = 35.0 / 384 - 5179.0 / 57600, e3 = 500.0 / 1113 - 7571.0 / 16695,
                            e4 = 125.0 / 192 - 393.0 / 640,
                            e5 = -2187.0 / 6784 + 92097.0 / 339200, e6 = 11.0 / 84 - 187.0 / 2100,
                            e7 = -1.0 / 40;
};

inline double error_norm(const Vec& err, const Vec& y0, const Vec& y1, double rtol,
                         double atol) {
    double acc = 0;
    for (int i = 0; i < err.size(); ++i) {
        const double sc = atol + rtol * std::max(std::abs(y0[i]), std::abs(y1[i]));
        const double r = err[i] / sc;
        acc += r * r;
    }
    return std::sqrt(acc / static_cast<double>(err.size()));
}

}  // namespace detail

using Field = std::function<Vec(const Vec&)>;
using Guard = std::function<bool(const Vec&)>;

// Adaptive embedded Runge-Kutta 4(5) integration with dense output on a
// uniform grid. The field may throw OutOfChart; that and a failing guard at
// an accepted state abort the run with a partial trajectory and the
// guard_tripped flag set. Persistent error-control failure throws
// StepSizeUnderflow.
inline Trajectory integrate(const Field& field, const Vec& y0, const IntegratorSettings& cfg,
                            const Guard& guard = [](const Vec&) { return true; }) {
    using D = detail::Dopri5;
    validate_settings(cfg);
    if (!guard(y0)) throw OutOfChart("initial state fails the domain guard");

    // output grid: k*dense_dt plus the exact endpoint
    std::vector<double> grid;
    const size_t cells = static_cast<size_t>(std::floor(cfg.t_max / cfg.dense_dt + 1e-9));
    grid.reserve(cells + 2);
    for (size_t k = 0; k <= cells; ++k) grid.push_back(static_cast<double>(k) * cfg.dense_dt);
    if (grid.back() < cfg.t_max * (1.0 - 1e-13)) grid.push_back(cfg.t_max);
    else grid.back() = cfg.t_max;

    Trajectory traj;
    traj.times.reserve(grid.size());
    traj.states.reserve(grid.size());
    traj.derivs.reserve(grid.size());

    Vec y = y0;
    Vec f0 = field(y);
    traj.stats.field_evals++;
    traj.times.push_back(0.0);
    traj.states.push_back(y);
    traj.derivs.push_back(f0);
    size_t next_out = 1;

    const double hmax = cfg.max_step > 0 ? cfg.max_step : cfg.t_max;
    // initial step from the scaled magnitudes of y and f
    double h;
    {
        const double d0 = detail::error_norm(y, y, y, cfg.rtol, cfg.atol);
        const double d1 = detail::error_norm(f0, y, y, cfg.rtol, cfg.atol);
        h = (d0 > 1e-10 && d1 > 1e-10) ? 0.01 * d0 / d1 : 1e-6 * cfg.t_max;
        h = std::min({h, hmax, cfg.t_max});
    }

    double t = 0.0;
    const int dim = static_cast<int>(y.size());
    Vec k2(dim), k3(dim), k4(dim), k5(dim), k6(dim), ynew(dim), fnew(dim), err(dim);

    const double t_eps = 4 * std::numeric_limits<double>::epsilon() * std::max(1.0, cfg.t_max);
    while (cfg.t_max - t > t_eps) {
        h = std::min({h, hmax, cfg.t_max - t});
        if (h < 16 * std::numeric_limits<double>::epsilon() * std::max(1.0, t))
            throw StepSizeUnderflow("step size underflow at t=" + std::to_string(t));

        bool stage_ok = true;
        try {
            k2 = field(y + h * (D::a21 * f0));
            k3 = field(y + h * (D::a31 * f0 + D::a32 * k2));
            k4 = field(y + h * (D::a41 * f0 + D::a42 * k2 + D::a43 * k3));
            k5 = field(y + h * (D::a51 * f0 + D::a52 * k2 + D::a53 * k3 + D::a54 * k4));
            k6 = field(y + h * (D::a61 * f0 + D::a62 * k2 + D::a63 * k3 + D::a64 * k4 +
                                D::a65 * k5));
            ynew = y + h * (D::b1 * f0 + D::b3 * k3 + D::b4 * k4 + D::b5 * k5 + D::b6 * k6);
            fnew = field(ynew);
            traj.stats.field_evals += 6;
        } catch (const OutOfChart&) {
            stage_ok = false;
        }
        if (!stage_ok || !guard(ynew)) {
            // approach the chart boundary by shrinking, then give up cleanly
            if (h > 1e3 * std::numeric_limits<double>::epsilon() * std::max(1.0, t)) {
                h *= 0.25;
                continue;
            }
            traj.guard_tripped = true;
            break;
        }

        err = h * (D::e1 * f0 + D::e3 * k3 + D::e4 * k4 + D::e5 * k5 + D::e6 * k6 +
                   D::e7 * fnew);
        const double en = detail::error_norm(err, y, ynew, cfg.rtol, cfg.atol);
        if (!std::isfinite(en)) {
            traj.stats.rejected++;
            h *= 0.2;
            continue;
        }
        if (en <= 1.0) {
            const double t1 = t + h;
            while (next_out < grid.size() &&
                   grid[next_out] <= t1 + 1e-12 * std::max(1.0, t1)) {
                const double s = std::clamp((grid[next_out] - t) / h, 0.0, 1.0);
                const double s2 = s * s, s3 = s2 * s;
                traj.times.push_back(grid[next_out]);
                traj.states.push_back((2 * s3 - 3 * s2 + 1) * y + (s3 - 2 * s2 + s) * h * f0 +
                                      (-2 * s3 + 3 * s2) * ynew + (s3 - s2) * h * fnew);
                traj.derivs.push_back(((6 * s2 - 6 * s) * y + (3 * s2 - 4 * s + 1) * h * f0 +
                                       (-6 * s2 + 6 * s) * ynew + (3 * s2 - 2 * s) * h * fnew) /
                                      h);
                ++next_out;
            }
            traj.stats.accepted++;
            traj.stats.min_step = std::min(traj.stats.min_step, h);
            traj.stats.max_step = std::max(traj.stats.max_step, h);
            t = t1;
            y.swap(ynew);
            f0.swap(fnew);
            h *= std::clamp(0.9 * std::pow(std::max(en, 1e-10), -0.2), 1.0, 5.0);
        } else {
            traj.stats.rejected++;
            h *= std::clamp(0.9 * std::pow(en, -0.2), 0.2, 0.9);
        }
    }

    if (!traj.guard_tripped) {
        // mop up grid points lost to rounding at the very end
        while (next_out < grid.size()) {
            traj.times.push_back(grid[next_out]);
            traj.states.push_back(y);
            traj.derivs.push_back(f0);
            ++next_out;
        }
    } else if (t > traj.times.back() + t_eps) {
        // close the partial trajectory at the last accepted in-chart state
        traj.times.push_back(t);
        traj.states.push_back(y);
        traj.derivs.push_back(f0);
    }
    return traj;
}

}  // namespace virial
