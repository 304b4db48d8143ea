#pragma once

#include <virial/frame.hpp>
#include <virial/jets.hpp>

namespace virial {

// Lagrangian dynamics in quasi-velocities (q, w) on the tangent bundle.
// Matrix blocks are always ordered (frame covectors, fibre differentials),
// and contraction of a vector Z into a 2-form matrix M is the row vector
// Z^T M, i.e. omega(Z, .).

inline double tq_energy(const LagrangianJet& lag, const VelocityState& s) {
    return s.w.dot(lag.d_fibre(s.q, s.w)) - lag.value(s.q, s.w);
}

// Jet of E_L = Delta(L) - L built from the Lagrangian jet.
inline PhaseFunctionJet tq_energy_jet(const LagrangianJet& lag) {
    PhaseFunctionJet jet;
    jet.value = [lag](const Vec& q, const Vec& w) {
        return w.dot(lag.d_fibre(q, w)) - lag.value(q, w);
    };
    jet.d_base = [lag](const Vec& q, const Vec& w) {
        return Vec(lag.d2_base_fibre(q, w) * w - lag.d_base(q, w));
    };
    jet.d_fibre = [lag](const Vec& q, const Vec& w) {
        return Vec(lag.d2_fibre_fibre(q, w) * w);
    };
    return jet;
}

// X_m(dL/dw^l) for all (m, l): S = B^T d2_base_fibre.
inline Mat frame_derivative_of_fibre_grad(const LagrangianJet& lag, const Mat& beta,
                                          const Vec& q, const Vec& w) {
    return beta.transpose() * lag.d2_base_fibre(q, w);
}

// Cartan 2-form as a 2n x 2n antisymmetric matrix,
//   [[ c, H ], [ -H, 0 ]]
// with H the fibre Hessian and
//   c(m,l) = gamma[k](m,l) dL/dw^k + X_l(dL/dw^m) - X_m(dL/dw^l).
inline Mat cartan_two_form(const LagrangianJet& lag, const FrameField& frame,
                           const VelocityState& s) {
    require_in_chart(frame, s.q);
    const int n = frame.dim;
    const Mat b = frame.beta(s.q);
    const Mat hess = lag.d2_fibre_fibre(s.q, s.w);
    invert_checked<DegenerateLagrangian>(hess, lag.cond_cap, "fibre Hessian");

    const Tensor3 gamma = hamel_symbols(frame, s.q);
    const Vec dldw = lag.d_fibre(s.q, s.w);
    const Mat sder = frame_derivative_of_fibre_grad(lag, b, s.q, s.w);

    Mat c = sder.transpose() - sder;
    for (int k = 0; k < n; ++k) c += dldw[k] * gamma[static_cast<size_t>(k)];

    Mat omega = Mat::Zero(2 * n, 2 * n);
    omega.topLeftCorner(n, n) = c;
    omega.topRightCorner(n, n) = hess;
    omega.bottomLeftCorner(n, n) = -hess;
    return omega;
}

struct TqFlow {
    Vec qdot;  // coordinate velocity
    Vec wdot;  // quasi-acceleration
};

inline TqFlow lagrangian_flow_field(const LagrangianJet& lag, const FrameField& frame,
                                    const VelocityState& s) {
    require_in_chart(frame, s.q);
    const int n = frame.dim;
    const Mat b = frame.beta(s.q);
    const Mat hess = lag.d2_fibre_fibre(s.q, s.w);
    const Tensor3 gamma = hamel_symbols(frame, s.q);
    const Vec dldw = lag.d_fibre(s.q, s.w);
    const Mat sder = frame_derivative_of_fibre_grad(lag, b, s.q, s.w);

    Vec rhs = Vec::Zero(n);
    for (int k = 0; k < n; ++k)
        rhs += dldw[k] * (gamma[static_cast<size_t>(k)].transpose() * s.w);
    rhs -= sder.transpose() * s.w;
    rhs += b.transpose() * lag.d_base(s.q, s.w);

    TqFlow flow;
    flow.qdot = b * s.w;
    flow.wdot = solve_checked<DegenerateLagrangian>(hess, rhs, lag.cond_cap, "fibre Hessian");
    return flow;
}

struct TqLift {
    Vec base_frame;   // f^i, components of D in the frame
    Vec base_coord;   // the same vector in coordinate components
    Vec vertical;     // fibre part, one component per w
};

// Complete lift of D = f^i X_i:
//   vertical^i = [ X_k(f^i) + gamma[i](k, j) f^j ] w^k.
inline TqLift complete_lift_tq(const BaseVectorSection& d, const FrameField& frame,
                               const VelocityState& s) {
    require_in_chart(frame, s.q);
    const int n = frame.dim;
    const Mat b = frame.beta(s.q);
    const Vec f = d.comps(s.q);
    const Mat fjac_frame = d.jac(s.q) * b;  // (i, k) = X_k(f^i)
    const Tensor3 gamma = hamel_symbols(frame, s.q);

    Vec vertical = fjac_frame * s.w;
    for (int i = 0; i < n; ++i)
        vertical[i] += s.w.dot(gamma[static_cast<size_t>(i)] * f);
    return {f, b * f, vertical};
}

// Jet of the fibrewise-linear virial function G = <theta_L, D^c> = dL/dw^i f^i.
inline PhaseFunctionJet tq_virial_from_field(const LagrangianJet& lag,
                                             const BaseVectorSection& d) {
    PhaseFunctionJet jet;
    jet.value = [lag, d](const Vec& q, const Vec& w) {
        return lag.d_fibre(q, w).dot(d.comps(q));
    };
    jet.d_base = [lag, d](const Vec& q, const Vec& w) {
        return Vec(lag.d2_base_fibre(q, w) * d.comps(q) +
                   d.jac(q).transpose() * lag.d_fibre(q, w));
    };
    jet.d_fibre = [lag, d](const Vec& q, const Vec& w) {
        return Vec(lag.d2_fibre_fibre(q, w) * d.comps(q));
    };
    return jet;
}

// dG/dt along the Lagrangian flow.
inline double virial_integrand_tq(const PhaseFunctionJet& g, const LagrangianJet& lag,
                                  const FrameField& frame, const VelocityState& s) {
    const TqFlow flow = lagrangian_flow_field(lag, frame, s);
    return flow.qdot.dot(g.d_base(s.q, s.w)) + flow.wdot.dot(g.d_fibre(s.q, s.w));
}

struct MechanicalSides {
    double lift_of_kinetic;   // D^c(T)
    double field_of_potential;  // D(V)
};

inline MechanicalSides mechanical_virial_sides(const LagrangianJet& lag,
                                               const BaseVectorSection& d,
                                               const FrameField& frame,
                                               const VelocityState& s) {
    if (!lag.split)
        throw NotMechanicalType("Lagrangian has no registered T/V split");
    const TqLift lift = complete_lift_tq(d, frame, s);
    const MechanicalSplit& split = *lag.split;
    MechanicalSides sides;
    sides.lift_of_kinetic = lift.base_coord.dot(split.kinetic.d_base(s.q, s.w)) +
                            lift.vertical.dot(split.kinetic.d_fibre(s.q, s.w));
    sides.field_of_potential = lift.base_coord.dot(split.potential.grad(s.q));
    return sides;
}

// First-order field on the packed state [q; w] for the integrator.
inline std::function<Vec(const Vec&)> make_tq_field(const LagrangianJet& lag,
                                                    const FrameField& frame) {
    const int n = frame.dim;
    return [lag, frame, n](const Vec& state) {
        VelocityState s{state.head(n), state.tail(n)};
        const TqFlow flow = lagrangian_flow_field(lag, frame, s);
        Vec out(2 * n);
        out << flow.qdot, flow.wdot;
        return out;
    };
}

}  // namespace virial
