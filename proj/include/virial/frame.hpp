#pragma once

#include <virial/numerics.hpp>
#include <virial/types.hpp>

#include <functional>
#include <utility>

namespace virial {

// A local frame {X_j} of vector fields on the configuration chart.
//
// Index conventions used throughout:
//   beta(q)      : n x n matrix B with B(k, j) = component k of X_j, so
//                  column j holds the coordinate expression of X_j.
//   beta_jac(q)  : slice i is dB/dq^i.
//   dual frame   : A = B^{-1}; row k of A holds the coefficients of the
//                  coframe element in the coordinate cobasis (A B = I).
//   hamel        : gamma[k](m, l) are the structure functions of the frame,
//                  [X_m, X_l] = gamma[k](m, l) X_k.
struct FrameField {
    int dim = 0;
    std::function<Mat(const Vec&)> beta;
    std::function<Tensor3(const Vec&)> beta_jac;
    std::function<bool(const Vec&)> domain_guard = [](const Vec&) { return true; };
    double cond_cap = 1e12;
};

struct VelocityState {
    Vec q;
    Vec w;  // quasi-velocity components
};

struct MomentumState {
    Vec q;
    Vec pi;  // quasi-momentum components
};

struct DualFrame {
    Mat alpha;
    double residual;  // norm of alpha*beta - I
};

inline void require_in_chart(const FrameField& frame, const Vec& q) {
    if (q.size() != frame.dim)
        throw OutOfChart("point dimension does not match frame");
    if (!frame.domain_guard(q))
        throw OutOfChart("point fails the chart domain guard");
}

inline DualFrame dual_frame(const FrameField& frame, const Vec& q) {
    require_in_chart(frame, q);
    const Mat b = frame.beta(q);
    const auto inv = invert_checked<SingularFrame>(b, frame.cond_cap, "frame matrix");
    return {inv.inverse, (inv.inverse * b - Mat::Identity(frame.dim, frame.dim)).norm()};
}

// v^i = w^j beta_j^i, so w = alpha(q) v.
inline Vec velocity_to_quasi(const FrameField& frame, const Vec& q, const Vec& v) {
    return dual_frame(frame, q).alpha * v;
}

inline Vec quasi_to_velocity(const FrameField& frame, const Vec& q, const Vec& w) {
    require_in_chart(frame, q);
    return frame.beta(q) * w;
}

// pi_k = p_i beta_k^i, the pairing of the covector with X_k.
inline Vec covector_to_quasi(const FrameField& frame, const Vec& q, const Vec& p) {
    require_in_chart(frame, q);
    return frame.beta(q).transpose() * p;
}

inline Vec quasi_to_covector(const FrameField& frame, const Vec& q, const Vec& pi) {
    return dual_frame(frame, q).alpha.transpose() * pi;
}

// dA/dq^i from the derivative-of-inverse rule dA = -A (dB) A.
inline Tensor3 dual_frame_jac(const FrameField& frame, const Vec& q) {
    const Mat a = dual_frame(frame, q).alpha;
    const Tensor3 db = frame.beta_jac(q);
    Tensor3 da(db.size());
    for (size_t i = 0; i < db.size(); ++i) da[i] = -a * db[i] * a;
    return da;
}

// gamma[k](m, l) = beta^j_m beta^i_l (dA(k,j)/dq^i - dA(k,i)/dq^j),
// antisymmetric in (m, l).
inline Tensor3 hamel_symbols(const FrameField& frame, const Vec& q) {
    const int n = frame.dim;
    const Mat b = frame.beta(q);
    const Tensor3 da = dual_frame_jac(frame, q);
    Tensor3 gamma(static_cast<size_t>(n), Mat::Zero(n, n));
    for (int k = 0; k < n; ++k) {
        // t(j, i) = dA(k, j)/dq^i - dA(k, i)/dq^j
        Mat t(n, n);
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i)
                t(j, i) = da[static_cast<size_t>(i)](k, j) - da[static_cast<size_t>(j)](k, i);
        gamma[static_cast<size_t>(k)] = b.transpose() * t * b;
    }
    return gamma;
}

inline FrameField identity_frame(int n) {
    FrameField f;
    f.dim = n;
    f.beta = [n](const Vec&) { return Mat::Identity(n, n); };
    f.beta_jac = [n](const Vec&) { return Tensor3(static_cast<size_t>(n), Mat::Zero(n, n)); };
    return f;
}

// Registration-time self-check: the supplied analytic Jacobian must agree
// with central finite differences of beta at each sample point.
inline void validate_frame(const FrameField& frame, const std::vector<Vec>& points,
                           double rel_tol = 1e-5) {
    for (const Vec& q : points) {
        require_in_chart(frame, q);
        const Tensor3 got = frame.beta_jac(q);
        const Tensor3 fd = central_mat_jac(frame.beta, q);
        if (got.size() != fd.size())
            throw ValidationFailure("frame Jacobian has wrong number of slices");
        for (size_t i = 0; i < fd.size(); ++i) {
            const double err = rel_err(got[i], fd[i]);
            if (!(err <= rel_tol))
                throw ValidationFailure("frame Jacobian slice " + std::to_string(i) +
                                        " deviates from finite differences by " +
                                        std::to_string(err));
        }
        dual_frame(frame, q);  // also enforces invertibility on the samples
    }
}

}  // namespace virial
