#pragma once

#include <virial/algebroid.hpp>
#include <virial/algebroid_hamiltonian.hpp>
#include <virial/algebroid_lagrangian.hpp>
#include <virial/averaging.hpp>
#include <virial/frame.hpp>
#include <virial/integrate.hpp>
#include <virial/so3.hpp>
#include <virial/tq_dynamics.hpp>
#include <virial/tstarq_dynamics.hpp>

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace virial::models {

enum class Formalism { Tq, Tstarq, AlgebroidLagrangian, AlgebroidHamiltonian };

inline std::string to_string(Formalism f) {
    switch (f) {
        case Formalism::Tq: return "tq";
        case Formalism::Tstarq: return "tstarq";
        case Formalism::AlgebroidLagrangian: return "algebroid_l";
        case Formalism::AlgebroidHamiltonian: return "algebroid_h";
    }
    return "?";
}

inline Formalism parse_formalism(const std::string& s) {
    if (s == "tq") return Formalism::Tq;
    if (s == "tstarq") return Formalism::Tstarq;
    if (s == "algebroid_l") return Formalism::AlgebroidLagrangian;
    if (s == "algebroid_h") return Formalism::AlgebroidHamiltonian;
    throw ConfigError("unknown formalism '" + s + "'");
}

struct KnownConstant {
    std::string name;
    double value;
    std::string source;  // how the value was obtained
};

struct ConservedQuantity {
    std::string name;
    std::function<double(const Vec&)> value;
};

struct TqPayload {
    FrameField frame;
    LagrangianJet lagrangian;
    std::vector<std::pair<std::string, BaseVectorSection>> sections;
};

struct TstarqPayload {
    FrameField frame;
    HamiltonianJet hamiltonian;
    std::vector<std::pair<std::string, BaseVectorSection>> sections;
};

struct AlgLagrangianPayload {
    AlgebroidLocal algebroid;
    AlgebroidLagrangianJet lagrangian;
    std::vector<std::pair<std::string, AlgebroidSection>> sections;
};

struct AlgHamiltonianPayload {
    AlgebroidLocal algebroid;
    DualFunctionJet hamiltonian;
};

// A built model bound to one formalism: packed-state field, guard, energy,
// conserved quantities, registered virial observables, and the raw payload
// for direct use of the dynamics modules.
struct ModelDescriptor {
    std::string name;
    Formalism formalism = Formalism::Tq;
    std::map<std::string, double> params;
    std::vector<std::string> state_names;
    Vec default_state;
    Vec wrap;  // per-component angular period (0 = linear coordinate)
    IntegratorSettings default_integrator;
    double period_eps = 1e-2;

    Field field;
    Guard guard = [](const Vec&) { return true; };
    std::function<double(const Vec&)> energy;
    std::vector<ConservedQuantity> conserved;
    std::vector<VirialObservable> virials;
    std::vector<KnownConstant> constants;
    std::function<std::vector<Vec>(int)> sample_states;  // packed, inside the guard
    std::function<void(Trajectory&)> post_process;       // optional (heavy-top projection)

    std::optional<TqPayload> tq;
    std::optional<TstarqPayload> tstarq;
    std::optional<AlgLagrangianPayload> alg_l;
    std::optional<AlgHamiltonianPayload> alg_h;
};

struct ModelInfo {
    std::string name;
    std::string description;
    std::vector<Formalism> formalisms;  // first entry is the default
    std::map<std::string, double> default_params;
    std::vector<std::string> state_names;
    std::vector<std::string> virial_names;
};

namespace detail {

inline std::map<std::string, double> merge_params(std::map<std::string, double> defaults,
                                                  const std::map<std::string, double>& given,
                                                  const std::string& model) {
    for (const auto& [k, v] : given) {
        if (!defaults.count(k))
            throw InvalidParams("model '" + model + "' has no parameter '" + k + "'");
        defaults[k] = v;
    }
    return defaults;
}

inline void split_samples(const std::vector<Vec>& packed, int n, std::vector<SplitState>& out,
                          std::vector<Vec>& base_out) {
    for (const Vec& s : packed) {
        out.push_back({s.head(n), s.tail(s.size() - n)});
        base_out.push_back(s.head(n));
    }
}

inline Vec inertia_from_params(const std::map<std::string, double>& p) {
    Vec inertia(3);
    inertia << p.at("I1"), p.at("I2"), p.at("I3");
    if (!(inertia.minCoeff() > 0))
        throw InvalidParams("inertia tensor must be symmetric positive definite");
    return inertia;
}

inline AlgebroidLocal so3_over_point() {
    AlgebroidLocal a;
    a.dim_base = 0;
    a.dim_fibre = 3;
    a.rho = [](const Vec&) { return Mat::Zero(0, 3); };
    a.rho_jac = [](const Vec&) { return Tensor3(); };
    a.C = [](const Vec&) { return so3_structure_tensor(); };
    a.C_jac = [](const Vec&) { return std::vector<Tensor3>(); };
    return a;
}

inline AlgebroidLocal heavy_top_algebroid() {
    AlgebroidLocal a;
    a.dim_base = 3;
    a.dim_fibre = 3;
    a.rho = [](const Vec& x) { return hat3(x); };
    a.rho_jac = [](const Vec&) {
        Tensor3 jac(3);
        for (int j = 0; j < 3; ++j) jac[static_cast<size_t>(j)] = hat3(Vec::Unit(3, j));
        return jac;
    };
    a.C = [](const Vec&) { return so3_structure_tensor(); };
    a.C_jac = [](const Vec&) { return std::vector<Tensor3>(3, Tensor3(3, Mat::Zero(3, 3))); };
    return a;
}

// G = <a, gamma> on the heavy top: a base function pulled back to the algebroid.
inline PhaseFunctionJet coordinate_jet(int base_dim, int fibre_dim, int index) {
    PhaseFunctionJet jet;
    jet.value = [index](const Vec& x, const Vec&) { return x[index]; };
    jet.d_base = [base_dim, index](const Vec&, const Vec&) {
        return Vec(Vec::Unit(base_dim, index));
    };
    jet.d_fibre = [fibre_dim](const Vec&, const Vec&) { return Vec(Vec::Zero(fibre_dim)); };
    return jet;
}

inline AlgebroidSection constant_section(const Vec& coeffs, int base_dim) {
    AlgebroidSection sec;
    sec.comps = [coeffs](const Vec&) { return coeffs; };
    sec.jac = [coeffs, base_dim](const Vec&) {
        return Mat(Mat::Zero(coeffs.size(), base_dim));
    };
    return sec;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Built-in model construction. Every descriptor is fully validated before it
// is returned: analytic jets against finite differences, frame Jacobians,
// structure equations where an algebroid is involved.
// ---------------------------------------------------------------------------

inline FrameField kepler_frame(double r_min) {
    FrameField frame;
    frame.dim = 2;
    frame.beta = [](const Vec& q) {
        Mat b = Mat::Zero(2, 2);
        b(0, 0) = 1;
        b(1, 1) = 1.0 / (q[0] * q[0]);
        return b;
    };
    frame.beta_jac = [](const Vec& q) {
        Tensor3 jac(2, Mat::Zero(2, 2));
        jac[0](1, 1) = -2.0 / (q[0] * q[0] * q[0]);
        return jac;
    };
    frame.domain_guard = [r_min](const Vec& q) { return q[0] > r_min; };
    return frame;
}

inline LagrangianJet kepler_lagrangian(double m, double k) {
    LagrangianJet lag;
    lag.value = [m, k](const Vec& q, const Vec& w) {
        const double r = q[0];
        return 0.5 * m * (w[0] * w[0] + w[1] * w[1] / (r * r)) + k / r;
    };
    lag.d_base = [m, k](const Vec& q, const Vec& w) {
        const double r = q[0];
        Vec g(2);
        g << -m * w[1] * w[1] / (r * r * r) - k / (r * r), 0;
        return g;
    };
    lag.d_fibre = [m](const Vec& q, const Vec& w) {
        const double r = q[0];
        Vec g(2);
        g << m * w[0], m * w[1] / (r * r);
        return g;
    };
    lag.d2_fibre_fibre = [m](const Vec& q, const Vec&) {
        const double r = q[0];
        Mat h = Mat::Zero(2, 2);
        h(0, 0) = m;
        h(1, 1) = m / (r * r);
        return h;
    };
    lag.d2_base_fibre = [m](const Vec& q, const Vec& w) {
        const double r = q[0];
        Mat h = Mat::Zero(2, 2);
        h(0, 1) = -2 * m * w[1] / (r * r * r);
        return h;
    };

    MechanicalSplit split;
    split.kinetic.value = [m](const Vec& q, const Vec& w) {
        const double r = q[0];
        return 0.5 * m * (w[0] * w[0] + w[1] * w[1] / (r * r));
    };
    split.kinetic.d_base = [m](const Vec& q, const Vec& w) {
        const double r = q[0];
        Vec g(2);
        g << -m * w[1] * w[1] / (r * r * r), 0;
        return g;
    };
    split.kinetic.d_fibre = lag.d_fibre;
    split.potential.value = [k](const Vec& q) { return -k / q[0]; };
    split.potential.grad = [k](const Vec& q) {
        Vec g(2);
        g << k / (q[0] * q[0]), 0;
        return g;
    };
    lag.split = split;
    return lag;
}

inline BaseVectorSection kepler_dilation_section() {
    BaseVectorSection d;
    d.comps = [](const Vec& q) {
        Vec f(2);
        f << q[0], 0;
        return f;
    };
    d.jac = [](const Vec&) {
        Mat j = Mat::Zero(2, 2);
        j(0, 0) = 1;
        return j;
    };
    return d;
}

namespace detail {

inline ModelDescriptor build_oscillator(const std::map<std::string, double>& overrides,
                                        Formalism formalism) {
    const auto p = merge_params({{"m", 1.0}, {"k", 1.0}}, overrides, "oscillator");
    const double m = p.at("m"), k = p.at("k");
    if (!(m > 0) || !(k > 0)) throw InvalidParams("oscillator requires m > 0 and k > 0");

    ModelDescriptor md;
    md.name = "oscillator";
    md.formalism = formalism;
    md.params = p;
    md.default_state = (Vec(2) << 1.0, 0.0).finished();
    md.wrap = Vec::Zero(2);
    md.default_integrator = {1e-10, 1e-12, 0, 20.0, 0.002};
    md.period_eps = 1e-2;
    md.constants.push_back(
        {"period", 2 * M_PI * std::sqrt(m / k), "closed form 2*pi*sqrt(m/k)"});

    const FrameField frame = identity_frame(1);
    BaseVectorSection dil;
    dil.comps = [](const Vec& q) { return q; };
    dil.jac = [](const Vec&) { return Mat(Mat::Identity(1, 1)); };

    md.sample_states = [](int count) {
        StateSampler samp;
        std::vector<Vec> out;
        for (int i = 0; i < count; ++i) out.push_back(samp.vec(2, -2.0, 2.0));
        return out;
    };

    if (formalism == Formalism::Tq) {
        LagrangianJet lag;
        lag.value = [m, k](const Vec& q, const Vec& w) {
            return 0.5 * m * w[0] * w[0] - 0.5 * k * q[0] * q[0];
        };
        lag.d_base = [k](const Vec& q, const Vec&) { return Vec(-k * q); };
        lag.d_fibre = [m](const Vec&, const Vec& w) { return Vec(m * w); };
        lag.d2_fibre_fibre = [m](const Vec&, const Vec&) {
            return Mat(m * Mat::Identity(1, 1));
        };
        lag.d2_base_fibre = [](const Vec&, const Vec&) { return Mat(Mat::Zero(1, 1)); };
        MechanicalSplit split;
        split.kinetic.value = [m](const Vec&, const Vec& w) { return 0.5 * m * w[0] * w[0]; };
        split.kinetic.d_base = [](const Vec&, const Vec&) { return Vec(Vec::Zero(1)); };
        split.kinetic.d_fibre = lag.d_fibre;
        split.potential.value = [k](const Vec& q) { return 0.5 * k * q[0] * q[0]; };
        split.potential.grad = [k](const Vec& q) { return Vec(k * q); };
        lag.split = split;

        md.state_names = {"q", "w"};
        md.field = make_tq_field(lag, frame);
        md.energy = [lag, frame](const Vec& s) {
            return tq_energy(lag, {s.head(1), s.tail(1)});
        };
        const PhaseFunctionJet g = tq_virial_from_field(lag, dil);
        md.virials.push_back(
            {"G_dilation", [g](const Vec& s) { return g.value(s.head(1), s.tail(1)); },
             [g, lag, frame](const Vec& s) {
                 return virial_integrand_tq(g, lag, frame, {s.head(1), s.tail(1)});
             }});
        md.tq = TqPayload{frame, lag, {{"dilation", dil}}};
    } else if (formalism == Formalism::Tstarq) {
        HamiltonianJet ham;
        ham.value = [m, k](const Vec& q, const Vec& pi) {
            return 0.5 * pi[0] * pi[0] / m + 0.5 * k * q[0] * q[0];
        };
        ham.d_base = [k](const Vec& q, const Vec&) { return Vec(k * q); };
        ham.d_fibre = [m](const Vec&, const Vec& pi) { return Vec(pi / m); };

        md.state_names = {"q", "pi"};
        md.field = make_tstarq_field(ham, frame);
        md.energy = [ham](const Vec& s) { return ham.value(s.head(1), s.tail(1)); };
        const PhaseFunctionJet g = linear_virial_function(dil);
        md.virials.push_back(
            {"G_dilation", [g](const Vec& s) { return g.value(s.head(1), s.tail(1)); },
             [g, ham, frame](const Vec& s) {
                 return virial_integrand_tstarq(g, ham, frame, {s.head(1), s.tail(1)});
             }});
        md.tstarq = TstarqPayload{frame, ham, {{"dilation", dil}}};
    } else {
        throw InvalidParams("oscillator supports formalisms tq and tstarq");
    }
    return md;
}

inline ModelDescriptor build_kepler_quasi(const std::map<std::string, double>& overrides,
                                          Formalism formalism) {
    const auto p =
        merge_params({{"m", 1.0}, {"k", 1.0}, {"r_min", 1e-3}}, overrides, "kepler_quasi");
    const double m = p.at("m"), k = p.at("k"), r_min = p.at("r_min");
    if (!(m > 0) || !(k > 0)) throw InvalidParams("kepler requires m > 0 and k > 0");
    if (!(r_min > 0)) throw InvalidParams("kepler requires r_min > 0");

    ModelDescriptor md;
    md.name = "kepler_quasi";
    md.formalism = formalism;
    md.params = p;
    // perihelion start of the a=1, e=0.5 ellipse
    md.default_state = (Vec(4) << 0.5, 0.0, 0.0, std::sqrt(0.75 * k / m)).finished();
    md.wrap = (Vec(4) << 0, 2 * M_PI, 0, 0).finished();
    md.default_integrator = {1e-10, 1e-12, 0, 14.0, 2e-4};
    md.period_eps = 1e-2;
    md.constants.push_back({"period", 2 * M_PI * std::sqrt(m / k),
                            "closed form 2*pi*sqrt(m a^3 / k) at a = 1"});
    md.constants.push_back({"energy", -k / 2.0, "closed form -k/(2a) at a = 1"});

    const FrameField frame = kepler_frame(r_min);
    const LagrangianJet lag = kepler_lagrangian(m, k);
    const BaseVectorSection dil = kepler_dilation_section();

    md.sample_states = [](int count) {
        StateSampler samp;
        std::vector<Vec> out;
        for (int i = 0; i < count; ++i) {
            Vec s(4);
            s << samp.in(0.4, 3.0), samp.in(-3.0, 3.0), samp.in(-1.5, 1.5), samp.in(-1.5, 1.5);
            out.push_back(s);
        }
        return out;
    };
    md.guard = [r_min](const Vec& s) { return s[0] > r_min; };

    if (formalism == Formalism::Tq) {
        md.state_names = {"r", "theta", "w1", "w2"};
        md.field = make_tq_field(lag, frame);
        md.energy = [lag](const Vec& s) { return tq_energy(lag, {s.head(2), s.tail(2)}); };
        const PhaseFunctionJet g = tq_virial_from_field(lag, dil);
        md.virials.push_back(
            {"G_dilation", [g](const Vec& s) { return g.value(s.head(2), s.tail(2)); },
             [g, lag, frame](const Vec& s) {
                 return virial_integrand_tq(g, lag, frame, {s.head(2), s.tail(2)});
             }});
        md.tq = TqPayload{frame, lag, {{"dilation", dil}}};
    } else if (formalism == Formalism::AlgebroidLagrangian) {
        // same dynamics through the tangent algebroid of the frame
        const AlgebroidLocal a = tangent_algebroid_from_frame(frame);
        md.state_names = {"r", "theta", "y1", "y2"};
        md.field = make_fibre_field(lag, a);
        md.energy = [lag](const Vec& s) {
            return energy_algebroid(lag, {s.head(2), s.tail(2)});
        };
        AlgebroidSection sig;
        sig.comps = dil.comps;
        sig.jac = dil.jac;
        const PhaseFunctionJet g = theta_section_jet(lag, sig);
        md.virials.push_back(
            {"G_dilation", [g](const Vec& s) { return g.value(s.head(2), s.tail(2)); },
             [g, lag, a](const Vec& s) {
                 return virial_integrand_fibre(g, lag, a, {s.head(2), s.tail(2)});
             }});
        md.alg_l = AlgLagrangianPayload{a, lag, {{"dilation", sig}}};
    } else {
        throw InvalidParams("kepler_quasi supports formalisms tq and algebroid_l");
    }
    return md;
}

inline ModelDescriptor build_kepler_cotangent(const std::map<std::string, double>& overrides,
                                              Formalism formalism) {
    if (formalism != Formalism::Tstarq)
        throw InvalidParams("kepler_cotangent supports only formalism tstarq");
    const auto p =
        merge_params({{"m", 1.0}, {"k", 1.0}, {"r_min", 1e-3}}, overrides, "kepler_cotangent");
    const double m = p.at("m"), k = p.at("k"), r_min = p.at("r_min");
    if (!(m > 0) || !(k > 0)) throw InvalidParams("kepler requires m > 0 and k > 0");
    if (!(r_min > 0)) throw InvalidParams("kepler requires r_min > 0");

    ModelDescriptor md;
    md.name = "kepler_cotangent";
    md.formalism = formalism;
    md.params = p;
    md.state_names = {"r", "theta", "pi1", "pi2"};
    md.default_state =
        (Vec(4) << 0.5, 0.0, 0.0, m * std::sqrt(0.75 * k / m) / 0.25).finished();
    md.wrap = (Vec(4) << 0, 2 * M_PI, 0, 0).finished();
    md.default_integrator = {1e-10, 1e-12, 0, 14.0, 2e-4};
    md.period_eps = 1e-1;  // pi2 swings by a few units over the e=0.5 ellipse
    md.constants.push_back({"period", 2 * M_PI * std::sqrt(m / k),
                            "closed form 2*pi*sqrt(m a^3 / k) at a = 1"});

    const FrameField frame = kepler_frame(r_min);
    HamiltonianJet ham;
    ham.value = [m, k](const Vec& q, const Vec& pi) {
        const double r = q[0];
        return 0.5 * (pi[0] * pi[0] + r * r * pi[1] * pi[1]) / m - k / r;
    };
    ham.d_base = [m, k](const Vec& q, const Vec& pi) {
        const double r = q[0];
        Vec g(2);
        g << r * pi[1] * pi[1] / m + k / (r * r), 0;
        return g;
    };
    ham.d_fibre = [m](const Vec& q, const Vec& pi) {
        const double r = q[0];
        Vec g(2);
        g << pi[0] / m, r * r * pi[1] / m;
        return g;
    };

    const BaseVectorSection dil = kepler_dilation_section();
    md.field = make_tstarq_field(ham, frame);
    md.guard = [r_min](const Vec& s) { return s[0] > r_min; };
    md.energy = [ham](const Vec& s) { return ham.value(s.head(2), s.tail(2)); };
    md.sample_states = [](int count) {
        StateSampler samp;
        std::vector<Vec> out;
        for (int i = 0; i < count; ++i) {
            Vec s(4);
            s << samp.in(0.4, 3.0), samp.in(-3.0, 3.0), samp.in(-1.5, 1.5), samp.in(-1.5, 1.5);
            out.push_back(s);
        }
        return out;
    };
    const PhaseFunctionJet g = linear_virial_function(dil);
    md.virials.push_back(
        {"G_dilation", [g](const Vec& s) { return g.value(s.head(2), s.tail(2)); },
         [g, ham, frame](const Vec& s) {
             return virial_integrand_tstarq(g, ham, frame, {s.head(2), s.tail(2)});
         }});
    md.tstarq = TstarqPayload{frame, ham, {{"dilation", dil}}};
    return md;
}

inline ModelDescriptor build_rigid_body(const std::map<std::string, double>& overrides,
                                        Formalism formalism, bool lagrangian_side) {
    const std::string name =
        lagrangian_side ? "rigid_body_lagrangian" : "rigid_body_hamiltonian";
    const auto p =
        merge_params({{"I1", 1.0}, {"I2", 2.0}, {"I3", 3.0}}, overrides, name);
    const Vec inertia = inertia_from_params(p);

    ModelDescriptor md;
    md.name = name;
    md.formalism = formalism;
    md.params = p;
    md.wrap = Vec::Zero(3);
    md.default_integrator = {1e-13, 1e-15, 0, 100.0, 0.01};
    md.period_eps = 1e-2;

    const AlgebroidLocal a = so3_over_point();
    md.sample_states = [](int count) {
        StateSampler samp;
        std::vector<Vec> out;
        for (int i = 0; i < count; ++i) out.push_back(samp.vec(3, -1.5, 1.5));
        return out;
    };

    if (lagrangian_side) {
        if (formalism != Formalism::AlgebroidLagrangian)
            throw InvalidParams(name + " supports only formalism algebroid_l");
        AlgebroidLagrangianJet lag;
        lag.value = [inertia](const Vec&, const Vec& y) {
            return 0.5 * y.dot(inertia.asDiagonal() * y);
        };
        lag.d_base = [](const Vec&, const Vec&) { return Vec(Vec::Zero(0)); };
        lag.d_fibre = [inertia](const Vec&, const Vec& y) {
            return Vec(inertia.asDiagonal() * y);
        };
        lag.d2_fibre_fibre = [inertia](const Vec&, const Vec&) {
            return Mat(inertia.asDiagonal());
        };
        lag.d2_base_fibre = [](const Vec&, const Vec&) { return Mat(Mat::Zero(0, 3)); };

        md.state_names = {"omega1", "omega2", "omega3"};
        md.default_state = (Vec(3) << 1.0, 1.0, 1.0).finished();
        md.field = make_fibre_field(lag, a);
        md.energy = [lag](const Vec& s) { return energy_algebroid(lag, {Vec(), s}); };
        md.conserved.push_back({"momentum_sq", [inertia](const Vec& s) {
                                    return (inertia.asDiagonal() * s).squaredNorm();
                                }});

        std::vector<std::pair<std::string, AlgebroidSection>> sections;
        const char* names[3] = {"G_momentum_1", "G_momentum_2", "G_momentum_3"};
        for (int axis = 0; axis < 3; ++axis) {
            const AlgebroidSection sec = constant_section(Vec::Unit(3, axis), 0);
            const PhaseFunctionJet g = theta_section_jet(lag, sec);
            md.virials.push_back(
                {names[axis], [g](const Vec& s) { return g.value(Vec(), s); },
                 [sec, lag, a](const Vec& s) {
                     return virial_integrand_section(lag, sec, a, {Vec(), s});
                 }});
            sections.emplace_back(names[axis], sec);
        }
        md.alg_l = AlgLagrangianPayload{a, lag, sections};
        md.constants.push_back({"energy", 0.5 * (inertia[0] + inertia[1] + inertia[2]),
                                "kinetic energy at the default state omega=(1,1,1)"});
    } else {
        if (formalism != Formalism::AlgebroidHamiltonian)
            throw InvalidParams(name + " supports only formalism algebroid_h");
        const Vec inv = inertia.cwiseInverse();
        DualFunctionJet ham;
        ham.value = [inv](const Vec&, const Vec& mu) {
            return 0.5 * mu.dot(inv.asDiagonal() * mu);
        };
        ham.d_base = [](const Vec&, const Vec&) { return Vec(Vec::Zero(0)); };
        ham.d_fibre = [inv](const Vec&, const Vec& mu) { return Vec(inv.asDiagonal() * mu); };

        md.state_names = {"mu1", "mu2", "mu3"};
        md.default_state = (Vec(3) << inertia[0], inertia[1], inertia[2]).finished();
        md.field = make_dual_field(ham, a);
        md.energy = [ham](const Vec& s) { return ham.value(Vec(), s); };
        md.conserved.push_back({"casimir", [](const Vec& s) { return s.squaredNorm(); }});

        const char* names[3] = {"G_mu_1", "G_mu_2", "G_mu_3"};
        for (int axis = 0; axis < 3; ++axis) {
            DualFunctionJet g;
            g.value = [axis](const Vec&, const Vec& mu) { return mu[axis]; };
            g.d_base = [](const Vec&, const Vec&) { return Vec(Vec::Zero(0)); };
            g.d_fibre = [axis](const Vec&, const Vec&) { return Vec(Vec::Unit(3, axis)); };
            md.virials.push_back({names[axis],
                                  [axis](const Vec& s) { return s[axis]; },
                                  [g, ham, a](const Vec& s) {
                                      return virial_integrand_dual(g, ham, a, {Vec(), s});
                                  }});
        }
        md.alg_h = AlgHamiltonianPayload{a, ham};
    }
    return md;
}

inline ModelDescriptor build_heavy_top(const std::map<std::string, double>& overrides,
                                       Formalism formalism) {
    if (formalism != Formalism::AlgebroidLagrangian)
        throw InvalidParams("heavy_top supports only formalism algebroid_l");
    const auto p = merge_params({{"I1", 1.0},
                                 {"I2", 1.0},
                                 {"I3", 2.0},
                                 {"mgl", 1.0},
                                 {"e1", 0.0},
                                 {"e2", 0.0},
                                 {"e3", 1.0},
                                 {"project_gamma", 0.0}},
                                overrides, "heavy_top");
    const Vec inertia = inertia_from_params(p);
    const double mgl = p.at("mgl");
    Vec axis(3);
    axis << p.at("e1"), p.at("e2"), p.at("e3");
    if (std::abs(axis.norm() - 1.0) > 1e-9)
        throw InvalidParams("heavy_top axis e must be a unit vector");

    ModelDescriptor md;
    md.name = "heavy_top";
    md.formalism = formalism;
    md.params = p;
    md.state_names = {"gamma1", "gamma2", "gamma3", "omega1", "omega2", "omega3"};
    {
        Vec g0(3);
        g0 << -0.44, 0.24, -0.87;
        g0.normalize();
        md.default_state = (Vec(6) << g0[0], g0[1], g0[2], 0.12, -0.32, -0.06).finished();
    }
    md.wrap = Vec::Zero(6);
    md.default_integrator = {1e-12, 1e-14, 0, 100.0, 0.01};
    md.period_eps = 1e-2;

    const AlgebroidLocal a = heavy_top_algebroid();
    AlgebroidLagrangianJet lag;
    lag.value = [inertia, mgl, axis](const Vec& x, const Vec& y) {
        return 0.5 * y.dot(inertia.asDiagonal() * y) - mgl * x.dot(axis);
    };
    lag.d_base = [mgl, axis](const Vec&, const Vec&) { return Vec(-mgl * axis); };
    lag.d_fibre = [inertia](const Vec&, const Vec& y) {
        return Vec(inertia.asDiagonal() * y);
    };
    lag.d2_fibre_fibre = [inertia](const Vec&, const Vec&) {
        return Mat(inertia.asDiagonal());
    };
    lag.d2_base_fibre = [](const Vec&, const Vec&) { return Mat(Mat::Zero(3, 3)); };

    md.field = make_fibre_field(lag, a);
    md.energy = [lag](const Vec& s) {
        return energy_algebroid(lag, {s.head(3), s.tail(3)});
    };
    md.conserved.push_back({"gamma_norm", [](const Vec& s) { return s.head(3).norm(); }});
    md.sample_states = [](int count) {
        StateSampler samp;
        std::vector<Vec> out;
        for (int i = 0; i < count; ++i) {
            Vec g = samp.vec(3, -1.0, 1.0);
            if (g.norm() < 1e-3) g = Vec::Unit(3, 0);
            g.normalize();
            Vec s(6);
            s << g, samp.vec(3, -1.5, 1.5);
            out.push_back(s);
        }
        return out;
    };

    std::vector<std::pair<std::string, AlgebroidSection>> sections;
    const char* gamma_names[3] = {"G_gamma_1", "G_gamma_2", "G_gamma_3"};
    for (int axis_i = 0; axis_i < 3; ++axis_i) {
        const PhaseFunctionJet g = coordinate_jet(3, 3, axis_i);
        md.virials.push_back(
            {gamma_names[axis_i], [axis_i](const Vec& s) { return s[axis_i]; },
             [g, lag, a](const Vec& s) {
                 return virial_integrand_fibre(g, lag, a, {s.head(3), s.tail(3)});
             }});
    }
    const char* mom_names[3] = {"G_momentum_1", "G_momentum_2", "G_momentum_3"};
    for (int axis_i = 0; axis_i < 3; ++axis_i) {
        const AlgebroidSection sec = constant_section(Vec::Unit(3, axis_i), 3);
        const PhaseFunctionJet g = theta_section_jet(lag, sec);
        md.virials.push_back(
            {mom_names[axis_i],
             [g](const Vec& s) { return g.value(s.head(3), s.tail(3)); },
             [sec, lag, a](const Vec& s) {
                 return virial_integrand_section(lag, sec, a, {s.head(3), s.tail(3)});
             }});
        sections.emplace_back(mom_names[axis_i], sec);
    }
    md.alg_l = AlgLagrangianPayload{a, lag, sections};

    if (p.at("project_gamma") != 0.0) {
        md.post_process = [](Trajectory& traj) {
            for (Vec& s : traj.states) s.head(3).normalize();
        };
    }
    return md;
}

inline void validate_descriptor(const ModelDescriptor& md) {
    const std::vector<Vec> packed = md.sample_states(8);
    std::vector<SplitState> states;
    std::vector<Vec> base_pts;

    if (md.tq) {
        const int n = md.tq->frame.dim;
        split_samples(packed, n, states, base_pts);
        validate_frame(md.tq->frame, base_pts);
        validate_lagrangian_jet(md.tq->lagrangian, states, 1e-5, md.name + ".L");
        if (md.tq->lagrangian.split) {
            validate_phase_jet(md.tq->lagrangian.split->kinetic, states, 1e-5,
                               md.name + ".T");
            for (const Vec& q : base_pts)
                check_jet_grad(md.tq->lagrangian.split->potential.value,
                               md.tq->lagrangian.split->potential.grad, q, 1e-5,
                               md.name + ".V");
        }
        for (const auto& [nm, sec] : md.tq->sections)
            validate_section(sec, base_pts, 1e-5, md.name + "." + nm);
    }
    if (md.tstarq) {
        const int n = md.tstarq->frame.dim;
        split_samples(packed, n, states, base_pts);
        validate_frame(md.tstarq->frame, base_pts);
        validate_phase_jet(md.tstarq->hamiltonian, states, 1e-5, md.name + ".H");
        for (const auto& [nm, sec] : md.tstarq->sections)
            validate_section(sec, base_pts, 1e-5, md.name + "." + nm);
    }
    if (md.alg_l) {
        const int n = md.alg_l->algebroid.dim_base;
        split_samples(packed, n, states, base_pts);
        validate_lagrangian_jet(md.alg_l->lagrangian, states, 1e-5, md.name + ".L");
        for (const auto& [nm, sec] : md.alg_l->sections)
            validate_section(sec, base_pts, 1e-5, md.name + "." + nm);
        const StructureResiduals res =
            check_structure_equations(md.alg_l->algebroid, base_pts);
        if (res.anchor > 1e-8 || res.jacobi > 1e-8 || res.antisymmetry > 1e-12)
            throw ValidationFailure(md.name + ": structure-equation residuals too large");
    }
    if (md.alg_h) {
        const int n = md.alg_h->algebroid.dim_base;
        split_samples(packed, n, states, base_pts);
        validate_phase_jet(md.alg_h->hamiltonian, states, 1e-5, md.name + ".H");
        const StructureResiduals res =
            check_structure_equations(md.alg_h->algebroid, base_pts);
        if (res.anchor > 1e-8 || res.jacobi > 1e-8 || res.antisymmetry > 1e-12)
            throw ValidationFailure(md.name + ": structure-equation residuals too large");
    }
    for (const Vec& s : packed)
        if (!md.guard(s))
            throw ValidationFailure(md.name + ": sample state fails its own guard");
}

}  // namespace detail

inline std::vector<std::string> model_names() {
    return {"oscillator",           "kepler_quasi",          "kepler_cotangent",
            "rigid_body_lagrangian", "rigid_body_hamiltonian", "heavy_top"};
}

inline Formalism default_formalism(const std::string& name) {
    if (name == "oscillator" || name == "kepler_quasi") return Formalism::Tq;
    if (name == "kepler_cotangent") return Formalism::Tstarq;
    if (name == "rigid_body_lagrangian" || name == "heavy_top")
        return Formalism::AlgebroidLagrangian;
    if (name == "rigid_body_hamiltonian") return Formalism::AlgebroidHamiltonian;
    throw UnknownModel("unknown model '" + name + "'");
}

inline std::vector<Formalism> supported_formalisms(const std::string& name) {
    if (name == "oscillator") return {Formalism::Tq, Formalism::Tstarq};
    if (name == "kepler_quasi") return {Formalism::Tq, Formalism::AlgebroidLagrangian};
    if (name == "kepler_cotangent") return {Formalism::Tstarq};
    if (name == "rigid_body_lagrangian") return {Formalism::AlgebroidLagrangian};
    if (name == "rigid_body_hamiltonian") return {Formalism::AlgebroidHamiltonian};
    if (name == "heavy_top") return {Formalism::AlgebroidLagrangian};
    throw UnknownModel("unknown model '" + name + "'");
}

inline ModelDescriptor build(const std::string& name,
                             const std::map<std::string, double>& params = {},
                             std::optional<Formalism> formalism = std::nullopt) {
    const Formalism f = formalism.value_or(default_formalism(name));
    ModelDescriptor md;
    if (name == "oscillator") md = detail::build_oscillator(params, f);
    else if (name == "kepler_quasi") md = detail::build_kepler_quasi(params, f);
    else if (name == "kepler_cotangent") md = detail::build_kepler_cotangent(params, f);
    else if (name == "rigid_body_lagrangian") md = detail::build_rigid_body(params, f, true);
    else if (name == "rigid_body_hamiltonian") md = detail::build_rigid_body(params, f, false);
    else if (name == "heavy_top") md = detail::build_heavy_top(params, f);
    else throw UnknownModel("unknown model '" + name + "'");
    detail::validate_descriptor(md);
    return md;
}

// Constant-coefficient linear virial function for the model's formalism.
inline VirialObservable linear_virial(const ModelDescriptor& md, const std::string& name,
                                      const Vec& coeffs) {
    VirialObservable obs;
    obs.name = name;
    if (md.tq) {
        const int n = md.tq->frame.dim;
        if (coeffs.size() != n) throw ConfigError("linear virial has wrong dimension");
        BaseVectorSection sec;
        sec.comps = [coeffs](const Vec&) { return coeffs; };
        sec.jac = [coeffs, n](const Vec&) { return Mat(Mat::Zero(n, n)); };
        const PhaseFunctionJet g = tq_virial_from_field(md.tq->lagrangian, sec);
        const auto lag = md.tq->lagrangian;
        const auto frame = md.tq->frame;
        obs.value = [g, n](const Vec& s) { return g.value(s.head(n), s.tail(n)); };
        obs.integrand = [g, lag, frame, n](const Vec& s) {
            return virial_integrand_tq(g, lag, frame, {s.head(n), s.tail(n)});
        };
    } else if (md.tstarq) {
        const int n = md.tstarq->frame.dim;
        if (coeffs.size() != n) throw ConfigError("linear virial has wrong dimension");
        BaseVectorSection sec;
        sec.comps = [coeffs](const Vec&) { return coeffs; };
        sec.jac = [coeffs, n](const Vec&) { return Mat(Mat::Zero(n, n)); };
        const PhaseFunctionJet g = linear_virial_function(sec);
        const auto ham = md.tstarq->hamiltonian;
        const auto frame = md.tstarq->frame;
        obs.value = [g, n](const Vec& s) { return g.value(s.head(n), s.tail(n)); };
        obs.integrand = [g, ham, frame, n](const Vec& s) {
            return virial_integrand_tstarq(g, ham, frame, {s.head(n), s.tail(n)});
        };
    } else if (md.alg_l) {
        const int n = md.alg_l->algebroid.dim_base;
        const int m = md.alg_l->algebroid.dim_fibre;
        if (coeffs.size() != m) throw ConfigError("linear virial has wrong dimension");
        const AlgebroidSection sec = detail::constant_section(coeffs, n);
        const PhaseFunctionJet g = theta_section_jet(md.alg_l->lagrangian, sec);
        const auto lag = md.alg_l->lagrangian;
        const auto a = md.alg_l->algebroid;
        obs.value = [g, n](const Vec& s) { return g.value(s.head(n), s.tail(s.size() - n)); };
        obs.integrand = [sec, lag, a, n](const Vec& s) {
            return virial_integrand_section(lag, sec, a, {s.head(n), s.tail(s.size() - n)});
        };
    } else if (md.alg_h) {
        const int n = md.alg_h->algebroid.dim_base;
        const int m = md.alg_h->algebroid.dim_fibre;
        if (coeffs.size() != m) throw ConfigError("linear virial has wrong dimension");
        DualFunctionJet g;
        g.value = [coeffs](const Vec&, const Vec& mu) { return coeffs.dot(mu); };
        g.d_base = [n](const Vec&, const Vec&) { return Vec(Vec::Zero(n)); };
        g.d_fibre = [coeffs](const Vec&, const Vec&) { return coeffs; };
        const auto ham = md.alg_h->hamiltonian;
        const auto a = md.alg_h->algebroid;
        obs.value = [coeffs, n](const Vec& s) { return coeffs.dot(s.tail(s.size() - n)); };
        obs.integrand = [g, ham, a, n](const Vec& s) {
            return virial_integrand_dual(g, ham, a, {s.head(n), s.tail(s.size() - n)});
        };
    }
    return obs;
}

inline std::vector<ModelInfo> list_models() {
    const std::map<std::string, std::string> descriptions = {
        {"oscillator", "1-D harmonic oscillator (sanity model)"},
        {"kepler_quasi", "planar Kepler problem in quasi-velocities (w2 = r^2 thetadot)"},
        {"kepler_cotangent", "planar Kepler problem in quasi-momenta"},
        {"rigid_body_lagrangian", "free rigid body, Lagrangian side of so(3)"},
        {"rigid_body_hamiltonian", "free rigid body, Lie-Poisson side of so(3)*"},
        {"heavy_top", "heavy top on S^2 x so(3)"}};
    std::vector<ModelInfo> out;
    for (const std::string& name : model_names()) {
        ModelInfo info;
        info.name = name;
        info.description = descriptions.at(name);
        info.formalisms = supported_formalisms(name);
        const ModelDescriptor md = build(name);
        info.default_params = md.params;
        info.state_names = md.state_names;
        for (const auto& v : md.virials) info.virial_names.push_back(v.name);
        out.push_back(std::move(info));
    }
    return out;
}

}  // namespace virial::models
