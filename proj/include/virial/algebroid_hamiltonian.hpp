#pragma once

#include <virial/algebroid.hpp>
#include <virial/jets.hpp>

namespace virial {

// Hamiltonian dynamics on the A-tangent of the dual bundle, in coordinates
// (x, mu).

struct DualState {
    Vec x;
    Vec mu;
};

struct CanonicalSection {
    Mat omega;  // 2m x 2m in the (X, P) block basis: [[C.mu, I], [-I, 0]]
    Vec theta;  // Liouville section components, theta = mu
};

inline CanonicalSection canonical_symplectic_section(const AlgebroidLocal& a,
                                                     const DualState& s) {
    require_in_base_chart(a, s.x);
    const int m = a.dim_fibre;
    const Tensor3 c = a.C(s.x);
    Mat omega = Mat::Zero(2 * m, 2 * m);
    for (int g = 0; g < m; ++g)
        omega.topLeftCorner(m, m) += s.mu[g] * c[static_cast<size_t>(g)];
    omega.topRightCorner(m, m) = Mat::Identity(m, m);
    omega.bottomLeftCorner(m, m) = -Mat::Identity(m, m);
    return {omega, s.mu};
}

struct DualFlow {
    Vec xdot;
    Vec mudot;
};

//   xdot^i   = rho^i_a dH/dmu_a
//   mudot_a  = -( C^g_{ab} mu_g dH/dmu_b + rho^i_a dH/dx^i )
inline DualFlow algebroid_hamilton_field(const DualFunctionJet& ham, const AlgebroidLocal& a,
                                         const DualState& s) {
    require_in_base_chart(a, s.x);
    const int m = a.dim_fibre;
    const Mat rho = a.rho(s.x);
    const Tensor3 c = a.C(s.x);
    const Vec dhdmu = ham.d_fibre(s.x, s.mu);

    Vec mudot = -(rho.transpose() * ham.d_base(s.x, s.mu));
    for (int g = 0; g < m; ++g)
        mudot -= s.mu[g] * (c[static_cast<size_t>(g)] * dhdmu);
    return {rho * dhdmu, mudot};
}

// dG/dt along the Hamiltonian flow.
inline double virial_integrand_dual(const DualFunctionJet& g, const DualFunctionJet& ham,
                                    const AlgebroidLocal& a, const DualState& s) {
    const DualFlow flow = algebroid_hamilton_field(ham, a, s);
    return flow.xdot.dot(g.d_base(s.x, s.mu)) + flow.mudot.dot(g.d_fibre(s.x, s.mu));
}

inline std::function<Vec(const Vec&)> make_dual_field(const DualFunctionJet& ham,
                                                      const AlgebroidLocal& a) {
    const int n = a.dim_base, m = a.dim_fibre;
    return [ham, a, n, m](const Vec& state) {
        DualState s{state.head(n), state.tail(m)};
        const DualFlow flow = algebroid_hamilton_field(ham, a, s);
        Vec out(n + m);
        out << flow.xdot, flow.mudot;
        return out;
    };
}

}  // namespace virial
