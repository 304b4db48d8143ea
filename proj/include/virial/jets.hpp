#pragma once

#include <virial/numerics.hpp>
#include <virial/types.hpp>

#include <functional>
#include <optional>
#include <random>
#include <vector>

namespace virial {

// First-order jet of a function on the base chart.
struct BaseFunctionJet {
    std::function<double(const Vec&)> value;
    std::function<Vec(const Vec&)> grad;
};

// First-order jet of a function on a split space (base point x, fibre
// coordinate v). The fibre slot plays the role of w, pi, y or mu depending
// on the formalism.
struct PhaseFunctionJet {
    std::function<double(const Vec& x, const Vec& v)> value;
    std::function<Vec(const Vec& x, const Vec& v)> d_base;
    std::function<Vec(const Vec& x, const Vec& v)> d_fibre;
};

using HamiltonianJet = PhaseFunctionJet;   // H(q, pi)
using DualFunctionJet = PhaseFunctionJet;  // functions of (x, mu) on the dual bundle

struct MechanicalSplit {
    PhaseFunctionJet kinetic;    // T(x, v)
    BaseFunctionJet potential;   // V(x), independent of the fibre slot
};

// Jet of a Lagrangian: first partials plus the fibre Hessian and the mixed
// second partials needed by the dynamics.
//   d2_fibre_fibre(x, v) : (a, b) -> d^2 L / dv^a dv^b   (symmetric)
//   d2_base_fibre(x, v)  : (i, a) -> d^2 L / dx^i dv^a
struct LagrangianJet {
    std::function<double(const Vec&, const Vec&)> value;
    std::function<Vec(const Vec&, const Vec&)> d_base;
    std::function<Vec(const Vec&, const Vec&)> d_fibre;
    std::function<Mat(const Vec&, const Vec&)> d2_fibre_fibre;
    std::function<Mat(const Vec&, const Vec&)> d2_base_fibre;
    std::optional<MechanicalSplit> split;  // present for L = T - V models
    double cond_cap = 1e12;
};

using AlgebroidLagrangianJet = LagrangianJet;  // same shape on a Lie algebroid

// Section of a vector bundle given in a local basis: comps(x) holds the
// components, jac(x)(a, i) = d comps^a / d x^i.
struct VectorSection {
    std::function<Vec(const Vec&)> comps;
    std::function<Mat(const Vec&)> jac;
};

using BaseVectorSection = VectorSection;  // D = f^i X_i on the configuration space
using AlgebroidSection = VectorSection;   // sigma = sigma^alpha e_alpha

struct SplitState {
    Vec x;
    Vec v;
};

inline void check_jet_grad(const std::function<double(const Vec&)>& value,
                           const std::function<Vec(const Vec&)>& grad, const Vec& x,
                           double rel_tol, const std::string& what) {
    const Vec got = grad(x);
    const Vec fd = central_grad(value, x);
    const double err = (got - fd).norm() / (1.0 + fd.norm());
    if (!(err <= rel_tol))
        throw ValidationFailure(what + " deviates from finite differences by " +
                                std::to_string(err));
}

inline void validate_phase_jet(const PhaseFunctionJet& jet,
                               const std::vector<SplitState>& samples,
                               double rel_tol = 1e-5, const std::string& name = "jet") {
    for (const auto& s : samples) {
        check_jet_grad([&](const Vec& x) { return jet.value(x, s.v); },
                       [&](const Vec& x) { return jet.d_base(x, s.v); }, s.x, rel_tol,
                       name + ".d_base");
        check_jet_grad([&](const Vec& v) { return jet.value(s.x, v); },
                       [&](const Vec& v) { return jet.d_fibre(s.x, v); }, s.v, rel_tol,
                       name + ".d_fibre");
    }
}

inline void validate_lagrangian_jet(const LagrangianJet& jet,
                                    const std::vector<SplitState>& samples,
                                    double rel_tol = 1e-5,
                                    const std::string& name = "lagrangian") {
    for (const auto& s : samples) {
        check_jet_grad([&](const Vec& x) { return jet.value(x, s.v); },
                       [&](const Vec& x) { return jet.d_base(x, s.v); }, s.x, rel_tol,
                       name + ".d_base");
        check_jet_grad([&](const Vec& v) { return jet.value(s.x, v); },
                       [&](const Vec& v) { return jet.d_fibre(s.x, v); }, s.v, rel_tol,
                       name + ".d_fibre");

        const Mat hess = jet.d2_fibre_fibre(s.x, s.v);
        if (rel_err(hess, Mat(hess.transpose())) > 1e-12)
            throw ValidationFailure(name + ".d2_fibre_fibre is not symmetric");
        const Mat hess_fd =
            central_jac([&](const Vec& v) { return jet.d_fibre(s.x, v); }, s.v);
        if (rel_err(hess, hess_fd) > rel_tol)
            throw ValidationFailure(name + ".d2_fibre_fibre deviates from finite differences");

        // mixed block: row i, column a = d(dL/dv^a)/dx^i
        const Mat mixed = jet.d2_base_fibre(s.x, s.v);
        const Mat mixed_fd =
            central_jac([&](const Vec& x) { return jet.d_fibre(x, s.v); }, s.x).transpose();
        if (rel_err(mixed, mixed_fd) > rel_tol)
            throw ValidationFailure(name + ".d2_base_fibre deviates from finite differences");
    }
}

inline void validate_section(const VectorSection& sec, const std::vector<Vec>& points,
                             double rel_tol = 1e-5, const std::string& name = "section") {
    for (const Vec& x : points) {
        const Mat got = sec.jac(x);
        const Mat fd = central_jac(sec.comps, x);
        if (rel_err(got, fd) > rel_tol)
            throw ValidationFailure(name + ".jac deviates from finite differences");
    }
}

// Deterministic sample-state generator for validation sweeps.
struct StateSampler {
    std::mt19937 rng{20240211u};
    std::uniform_real_distribution<double> unit{-1.0, 1.0};

    double in(double lo, double hi) { return lo + (hi - lo) * (0.5 * (unit(rng) + 1.0)); }

    Vec vec(int n, double lo, double hi) {
        Vec v(n);
        for (int i = 0; i < n; ++i) v[i] = in(lo, hi);
        return v;
    }
};

}  // namespace virial
