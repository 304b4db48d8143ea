#pragma once

#include <virial/frame.hpp>
#include <virial/jets.hpp>

namespace virial {

// Hamiltonian dynamics in quasi-momenta (q, pi) on the cotangent bundle.

struct TstarqFlow {
    Vec qdot;
    Vec pidot;
};

//   qdot^k  = (dH/dpi_i) beta_i^k
//   pidot_i = -( beta_i^j dH/dq^j + pi_k gamma[k](i, j) dH/dpi_j )
inline TstarqFlow hamiltonian_flow_field(const HamiltonianJet& ham, const FrameField& frame,
                                         const MomentumState& s) {
    require_in_chart(frame, s.q);
    const int n = frame.dim;
    const Mat b = frame.beta(s.q);
    const Tensor3 gamma = hamel_symbols(frame, s.q);
    const Vec dhdq = ham.d_base(s.q, s.pi);
    const Vec dhdpi = ham.d_fibre(s.q, s.pi);

    Vec pidot = -(b.transpose() * dhdq);
    for (int k = 0; k < n; ++k)
        pidot -= s.pi[k] * (gamma[static_cast<size_t>(k)] * dhdpi);
    return {b * dhdpi, pidot};
}

// Jet of the fibrewise-linear function G(q, pi) = pi_k f^k(q) attached to the
// base field D = f^i X_i. Its Hamiltonian vector field is the complete lift
// of D to the cotangent bundle.
inline PhaseFunctionJet linear_virial_function(const BaseVectorSection& d) {
    PhaseFunctionJet jet;
    jet.value = [d](const Vec& q, const Vec& pi) { return pi.dot(d.comps(q)); };
    jet.d_base = [d](const Vec& q, const Vec& pi) { return Vec(d.jac(q).transpose() * pi); };
    jet.d_fibre = [d](const Vec& q, const Vec&) { return d.comps(q); };
    return jet;
}

// dG/dt along the flow of H, i.e. X_H(G).
inline double virial_integrand_tstarq(const PhaseFunctionJet& g, const HamiltonianJet& ham,
                                      const FrameField& frame, const MomentumState& s) {
    const TstarqFlow flow = hamiltonian_flow_field(ham, frame, s);
    return flow.qdot.dot(g.d_base(s.q, s.pi)) + flow.pidot.dot(g.d_fibre(s.q, s.pi));
}

inline std::function<Vec(const Vec&)> make_tstarq_field(const HamiltonianJet& ham,
                                                        const FrameField& frame) {
    const int n = frame.dim;
    return [ham, frame, n](const Vec& state) {
        MomentumState s{state.head(n), state.tail(n)};
        const TstarqFlow flow = hamiltonian_flow_field(ham, frame, s);
        Vec out(2 * n);
        out << flow.qdot, flow.pidot;
        return out;
    };
}

}  // namespace virial
