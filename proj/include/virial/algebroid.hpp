#pragma once

#include <virial/frame.hpp>
#include <virial/jets.hpp>

#include <cmath>

namespace virial {

// Local model of a Lie algebroid over a chart of the base manifold.
//
//   rho(x)    : n x m anchor matrix, rho(i, alpha) = rho^i_alpha.
//   rho_jac(x): slice j is d rho / d x^j.
//   C(x)      : slice gamma is the m x m matrix C^gamma_{alpha beta},
//               antisymmetric in (alpha, beta).
//   C_jac(x)  : element i is the C-tensor differentiated along x^i.
//
// dim_base = 0 (a Lie algebra over a point) is a first-class case: all
// base-indexed containers are empty and base-derivative terms vanish.
struct AlgebroidLocal {
    int dim_base = 0;
    int dim_fibre = 0;
    std::function<Mat(const Vec&)> rho;
    std::function<Tensor3(const Vec&)> rho_jac;
    std::function<Tensor3(const Vec&)> C;
    std::function<std::vector<Tensor3>(const Vec&)> C_jac;
    std::function<bool(const Vec&)> domain_guard = [](const Vec&) { return true; };
};

struct SymplecticSectionField {
    std::function<Mat(const Vec&)> omega;  // m x m antisymmetric
    double cond_cap = 1e12;
};

inline void require_in_base_chart(const AlgebroidLocal& a, const Vec& x) {
    if (x.size() != a.dim_base)
        throw OutOfChart("base point dimension does not match algebroid");
    if (!a.domain_guard(x))
        throw OutOfChart("base point fails the chart domain guard");
}

struct StructureResiduals {
    double antisymmetry = 0;  // max |C^g_{ab} + C^g_{ba}|
    double anchor = 0;        // max anchor-compatibility defect
    double jacobi = 0;        // max cyclic Jacobi defect
};

// Residuals of the local structure equations:
//   anchor:  rho^j_a d rho^i_b/dx^j - rho^j_b d rho^i_a/dx^j - rho^i_g C^g_{ab}
//   jacobi:  sum over cyclic (a,b,g) of [ rho^i_a dC^n_{bg}/dx^i + C^n_{as} C^s_{bg} ]
inline StructureResiduals check_structure_equations(const AlgebroidLocal& a,
                                                    const std::vector<Vec>& points) {
    StructureResiduals res;
    const int n = a.dim_base, m = a.dim_fibre;
    for (const Vec& x : points) {
        require_in_base_chart(a, x);
        const Mat rho = a.rho(x);
        const Tensor3 rho_jac = a.rho_jac(x);
        const Tensor3 c = a.C(x);
        const std::vector<Tensor3> c_jac = a.C_jac(x);

        for (int g = 0; g < m; ++g)
            res.antisymmetry = std::max(
                res.antisymmetry,
                (c[static_cast<size_t>(g)] + c[static_cast<size_t>(g)].transpose())
                    .cwiseAbs()
                    .maxCoeff());

        for (int al = 0; al < m; ++al)
            for (int be = 0; be < m; ++be)
                for (int i = 0; i < n; ++i) {
                    double v = 0;
                    for (int j = 0; j < n; ++j)
                        v += rho(j, al) * rho_jac[static_cast<size_t>(j)](i, be) -
                             rho(j, be) * rho_jac[static_cast<size_t>(j)](i, al);
                    for (int g = 0; g < m; ++g)
                        v -= rho(i, g) * c[static_cast<size_t>(g)](al, be);
                    res.anchor = std::max(res.anchor, std::abs(v));
                }

        for (int nu = 0; nu < m; ++nu)
            for (int al = 0; al < m; ++al)
                for (int be = 0; be < m; ++be)
                    for (int ga = 0; ga < m; ++ga) {
                        double v = 0;
                        const int idx[3][3] = {{al, be, ga}, {be, ga, al}, {ga, al, be}};
                        for (const auto& t : idx) {
                            for (int i = 0; i < n; ++i)
                                v += rho(i, t[0]) *
                                     c_jac[static_cast<size_t>(i)][static_cast<size_t>(nu)](
                                         t[1], t[2]);
                            for (int si = 0; si < m; ++si)
                                v += c[static_cast<size_t>(nu)](t[0], si) *
                                     c[static_cast<size_t>(si)](t[1], t[2]);
                        }
                        res.jacobi = std::max(res.jacobi, std::abs(v));
                    }
    }
    return res;
}

// Components of the algebroid differential of a base function,
// (df)_alpha = rho^i_alpha df/dx^i.
inline Vec algebroid_differential(const BaseFunctionJet& f, const AlgebroidLocal& a,
                                  const Vec& x) {
    require_in_base_chart(a, x);
    return a.rho(x).transpose() * f.grad(x);
}

// Structure functions of the A-tangent (prolongation) to a fibre bundle with
// the given fibre dimension, in the basis {X_alpha, V_J}: the anchor gains an
// identity block on the new fibre directions and the bracket tensor embeds C
// with every V-indexed component zero. Base coordinates of the result are
// (x, u) stacked.
inline AlgebroidLocal prolongation_structure_functions(const AlgebroidLocal& a,
                                                       int fibre_dim_of_p) {
    const int n = a.dim_base, m = a.dim_fibre, p = fibre_dim_of_p;
    AlgebroidLocal out;
    out.dim_base = n + p;
    out.dim_fibre = m + p;
    out.rho = [a, n, m, p](const Vec& xu) {
        Mat r = Mat::Zero(n + p, m + p);
        r.topLeftCorner(n, m) = a.rho(xu.head(n));
        r.bottomRightCorner(p, p) = Mat::Identity(p, p);
        return r;
    };
    out.rho_jac = [a, n, m, p](const Vec& xu) {
        Tensor3 out_jac(static_cast<size_t>(n + p), Mat::Zero(n + p, m + p));
        const Tensor3 base = a.rho_jac(xu.head(n));
        for (int j = 0; j < n; ++j)
            out_jac[static_cast<size_t>(j)].topLeftCorner(n, m) = base[static_cast<size_t>(j)];
        return out_jac;
    };
    out.C = [a, n, m, p](const Vec& xu) {
        Tensor3 c(static_cast<size_t>(m + p), Mat::Zero(m + p, m + p));
        const Tensor3 base = a.C(xu.head(n));
        for (int g = 0; g < m; ++g)
            c[static_cast<size_t>(g)].topLeftCorner(m, m) = base[static_cast<size_t>(g)];
        return c;
    };
    out.C_jac = [a, n, m, p](const Vec& xu) {
        std::vector<Tensor3> cj(static_cast<size_t>(n + p),
                                Tensor3(static_cast<size_t>(m + p), Mat::Zero(m + p, m + p)));
        const std::vector<Tensor3> base = a.C_jac(xu.head(n));
        for (int i = 0; i < n; ++i)
            for (int g = 0; g < m; ++g)
                cj[static_cast<size_t>(i)][static_cast<size_t>(g)].topLeftCorner(m, m) =
                    base[static_cast<size_t>(i)][static_cast<size_t>(g)];
        return cj;
    };
    out.domain_guard = [a, n](const Vec& xu) { return a.domain_guard(xu.head(n)); };
    return out;
}

// Poisson bracket on the base induced by a symplectic 2-section,
//   {F, G} = omega^{ab} rho^i_a rho^j_b (dF/dx^i)(dG/dx^j).
inline double base_poisson_bracket(const SymplecticSectionField& sym, const AlgebroidLocal& a,
                                   const BaseFunctionJet& f, const BaseFunctionJet& g,
                                   const Vec& x) {
    require_in_base_chart(a, x);
    const Mat om = sym.omega(x);
    if (rel_err(om, Mat(-om.transpose())) > 1e-12)
        throw DegenerateSymplectic("2-section is not antisymmetric");
    const Mat om_inv =
        invert_checked<DegenerateSymplectic>(om, sym.cond_cap, "symplectic 2-section").inverse;
    const Mat rho = a.rho(x);
    return f.grad(x).dot(rho * om_inv * rho.transpose() * g.grad(x));
}

// The tangent algebroid of a frame: anchor = beta, bracket tensor = Hamel
// symbols. The frame carries only first derivatives of beta, so dC/dx is
// obtained by central differences of the (analytic) Hamel symbols with a
// cbrt(eps)-scaled step.
inline AlgebroidLocal tangent_algebroid_from_frame(const FrameField& frame) {
    const int n = frame.dim;
    AlgebroidLocal a;
    a.dim_base = n;
    a.dim_fibre = n;
    a.rho = frame.beta;
    a.rho_jac = frame.beta_jac;
    a.C = [frame](const Vec& q) { return hamel_symbols(frame, q); };
    a.C_jac = [frame, n](const Vec& q) {
        const double h0 = std::cbrt(std::numeric_limits<double>::epsilon());
        std::vector<Tensor3> out(static_cast<size_t>(n));
        Vec qp = q, qm = q;
        for (int i = 0; i < n; ++i) {
            const double h = h0 * std::max(1.0, std::abs(q[i]));
            qp[i] = q[i] + h;
            qm[i] = q[i] - h;
            const Tensor3 gp = hamel_symbols(frame, qp);
            const Tensor3 gm = hamel_symbols(frame, qm);
            Tensor3 d(static_cast<size_t>(n));
            for (int k = 0; k < n; ++k)
                d[static_cast<size_t>(k)] =
                    (gp[static_cast<size_t>(k)] - gm[static_cast<size_t>(k)]) / (2 * h);
            out[static_cast<size_t>(i)] = std::move(d);
            qp[i] = q[i];
            qm[i] = q[i];
        }
        return out;
    };
    a.domain_guard = frame.domain_guard;
    return a;
}

}  // namespace virial
