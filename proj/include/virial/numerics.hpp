#pragma once

#include <virial/types.hpp>

#include <cmath>
#include <functional>
#include <limits>

namespace virial {

struct InverseResult {
    Mat inverse;
    double rcond;  // reciprocal condition estimate from the LU factors
};

// LU inversion with partial pivoting and a reciprocal-condition gate. The
// rcond estimate of an exactly singular factorization is unreliable, so the
// result is checked for finiteness as well. Throws E on either failure.
template <class E>
InverseResult invert_checked(const Mat& a, double cond_cap, const std::string& what) {
    Eigen::PartialPivLU<Mat> lu(a);
    const double rc = lu.rcond();
    Mat inv = lu.inverse();
    if (!(rc > 1.0 / cond_cap) || !inv.allFinite())
        throw E(what + ": condition estimate " +
                std::to_string(rc > 0 ? 1.0 / rc : std::numeric_limits<double>::infinity()) +
                " exceeds cap");
    return {std::move(inv), rc};
}

template <class E>
Vec solve_checked(const Mat& a, const Vec& b, double cond_cap, const std::string& what) {
    Eigen::PartialPivLU<Mat> lu(a);
    const double rc = lu.rcond();
    Vec x = lu.solve(b);
    if (!(rc > 1.0 / cond_cap) || !x.allFinite())
        throw E(what + ": matrix numerically singular");
    return x;
}

// Central-difference step for validating analytic derivatives against the
// value function: h_i = max(h0, h0*|x_i|).
inline double fd_step(double xi, double h0 = 1e-6) {
    return std::max(h0, h0 * std::abs(xi));
}

inline Vec central_grad(const std::function<double(const Vec&)>& f, const Vec& x,
                        double h0 = 1e-6) {
    Vec g(x.size());
    Vec xp = x, xm = x;
    for (int i = 0; i < x.size(); ++i) {
        const double h = fd_step(x[i], h0);
        xp[i] = x[i] + h;
        xm[i] = x[i] - h;
        g[i] = (f(xp) - f(xm)) / (2 * h);
        xp[i] = x[i];
        xm[i] = x[i];
    }
    return g;
}

// Jacobian of a vector-valued map by central differences: row r, column i
// holds d f^r / d x^i.
inline Mat central_jac(const std::function<Vec(const Vec&)>& f, const Vec& x,
                       double h0 = 1e-6) {
    const Vec f0 = f(x);
    Mat jac(f0.size(), x.size());
    Vec xp = x, xm = x;
    for (int i = 0; i < x.size(); ++i) {
        const double h = fd_step(x[i], h0);
        xp[i] = x[i] + h;
        xm[i] = x[i] - h;
        jac.col(i) = (f(xp) - f(xm)) / (2 * h);
        xp[i] = x[i];
        xm[i] = x[i];
    }
    return jac;
}

// Central differences of a matrix-valued map; slice i is d M / d x^i.
inline Tensor3 central_mat_jac(const std::function<Mat(const Vec&)>& f, const Vec& x,
                               double h0 = 1e-6) {
    Tensor3 out(static_cast<size_t>(x.size()));
    Vec xp = x, xm = x;
    for (int i = 0; i < x.size(); ++i) {
        const double h = fd_step(x[i], h0);
        xp[i] = x[i] + h;
        xm[i] = x[i] - h;
        out[static_cast<size_t>(i)] = (f(xp) - f(xm)) / (2 * h);
        xp[i] = x[i];
        xm[i] = x[i];
    }
    return out;
}

inline double rel_err(double got, double want) {
    return std::abs(got - want) / (1.0 + std::abs(want));
}

inline double rel_err(const Mat& got, const Mat& want) {
    return (got - want).norm() / (1.0 + want.norm());
}

}  // namespace virial
