#pragma once

#include <virial/models.hpp>

#include <random>

// Shared fixtures for the test suites: deterministic sample generators and a
// couple of hand-built smooth frames with analytic Jacobians.
namespace testutil {

using virial::FrameField;
using virial::Mat;
using virial::Tensor3;
using virial::Vec;

inline std::mt19937 rng(unsigned seed = 12345u) { return std::mt19937(seed); }

inline double uniform(std::mt19937& gen, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(gen);
}

inline Vec rand_vec(std::mt19937& gen, int n, double lo, double hi) {
    Vec v(n);
    for (int i = 0; i < n; ++i) v[i] = uniform(gen, lo, hi);
    return v;
}

// 2-D frame with mildly position-dependent, well-conditioned beta.
inline FrameField wavy_frame() {
    FrameField f;
    f.dim = 2;
    f.beta = [](const Vec& q) {
        Mat b(2, 2);
        b << 1.0 + 0.1 * std::sin(q[1]), 0.2 + 0.05 * q[0],
             0.1 * q[0] * q[1],          1.0 + 0.1 * std::cos(q[0]);
        return b;
    };
    f.beta_jac = [](const Vec& q) {
        Tensor3 jac(2, Mat::Zero(2, 2));
        jac[0](0, 1) = 0.05;
        jac[0](1, 0) = 0.1 * q[1];
        jac[0](1, 1) = -0.1 * std::sin(q[0]);
        jac[1](0, 0) = 0.1 * std::cos(q[1]);
        jac[1](1, 0) = 0.1 * q[0];
        return jac;
    };
    f.domain_guard = [](const Vec& q) { return q.cwiseAbs().maxCoeff() < 2.0; };
    return f;
}

// 3-D frame mixing all coordinates.
inline FrameField shear_frame3() {
    FrameField f;
    f.dim = 3;
    f.beta = [](const Vec& q) {
        Mat b = Mat::Identity(3, 3);
        b(0, 1) = 0.2 * q[2];
        b(1, 2) = 0.15 * q[0];
        b(2, 0) = 0.1 * q[1] * q[1];
        b(0, 0) += 0.05 * std::sin(q[0]);
        return b;
    };
    f.beta_jac = [](const Vec& q) {
        Tensor3 jac(3, Mat::Zero(3, 3));
        jac[0](1, 2) = 0.15;
        jac[0](0, 0) = 0.05 * std::cos(q[0]);
        jac[1](2, 0) = 0.2 * q[1];
        jac[2](0, 1) = 0.2;
        return jac;
    };
    f.domain_guard = [](const Vec& q) { return q.cwiseAbs().maxCoeff() < 2.0; };
    return f;
}

}  // namespace testutil
