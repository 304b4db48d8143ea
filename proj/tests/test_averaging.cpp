#include "helpers.hpp"

#include <virial/averaging.hpp>
#include <virial/integrate.hpp>
#include <virial/models.hpp>

#include <catch2/catch_amalgamated.hpp>

using namespace virial;

TEST_CASE("integrator basics") {
    SECTION("zero field holds the state") {
        const Field f = [](const Vec& s) { return Vec(Vec::Zero(s.size())); };
        const Vec s0 = (Vec(3) << 1.0, -2.0, 0.5).finished();
        const Trajectory traj = integrate(f, s0, {1e-10, 1e-12, 0, 5.0, 0.05});
        CHECK(traj.times.front() == 0.0);
        CHECK(traj.times.back() == 5.0);
        for (const Vec& s : traj.states) CHECK((s - s0).norm() == 0.0);
    }
    SECTION("oscillator returns after one period") {
        const auto md = models::build("oscillator");
        const Trajectory traj =
            integrate(md.field, md.default_state, {1e-10, 1e-12, 0, 2 * M_PI, 0.01});
        CHECK((traj.states.back() - md.default_state).norm() < 1e-8);
    }
    SECTION("radial Kepler infall trips the guard") {
        const auto md = models::build("kepler_quasi");
        Vec s0(4);
        s0 << 1.0, 0.0, -1.0, 0.0;  // straight at the centre
        const Trajectory traj = integrate(md.field, s0, {1e-10, 1e-12, 0, 10.0, 0.001}, md.guard);
        CHECK(traj.guard_tripped);
        CHECK(traj.times.back() < 10.0);
        CHECK(traj.states.back()[0] > 0.0);
    }
    SECTION("persistent error-control failure raises StepSizeUnderflow") {
        const Field nan_field = [](const Vec& s) {
            return Vec(Vec::Constant(s.size(), std::nan("")));
        };
        CHECK_THROWS_AS(integrate(nan_field, Vec::Ones(2), {1e-10, 1e-12, 0, 1.0, 0.005}),
                        StepSizeUnderflow);
    }
    SECTION("settings validation") {
        CHECK_THROWS_AS(validate_settings({0.0, 1e-12, 0, 1.0, 0.001}), InvalidParams);
        CHECK_THROWS_AS(validate_settings({1e-10, 1e-12, 0, 1.0, 0.5}), InvalidParams);
    }
    SECTION("max_step caps the accepted steps") {
        const auto md = models::build("oscillator");
        const Trajectory traj =
            integrate(md.field, md.default_state, {1e-6, 1e-8, 0.05, 10.0, 0.05});
        CHECK(traj.stats.max_step <= 0.05 + 1e-15);
    }
    SECTION("halving tolerances by 1e2 improves the oscillator by >= 10^1.5") {
        const auto md = models::build("oscillator");
        double errs[2];
        int k = 0;
        for (double rt : {1e-5, 1e-7}) {
            const Trajectory t =
                integrate(md.field, md.default_state, {rt, rt * 1e-2, 0, 2 * M_PI, 0.01});
            errs[k++] = (t.states.back() - md.default_state).norm();
        }
        CHECK(errs[0] / errs[1] >= std::pow(10.0, 1.5));
    }
}

TEST_CASE("time averages") {
    const Field drift = [](const Vec&) { return Vec(Vec::Ones(1)); };
    const Trajectory clock =
        integrate(drift, Vec::Zero(1), {1e-10, 1e-12, 0, 2 * M_PI, 2 * M_PI / 256});

    SECTION("constant observable averages to itself exactly") {
        const AverageResult r = time_average([](const Vec&) { return 3.0; }, clock);
        CHECK(r.value == 3.0);
        CHECK(r.converged);
    }
    SECTION("sin over one period on uniform samples") {
        const AverageResult r =
            time_average([](const Vec& s) { return std::sin(s[0]); }, clock,
                         {AverageMode::Periodic, 1e-3, 2 * M_PI});
        CHECK(std::abs(r.value) < 1e-6);
    }
    SECTION("Kepler ellipse: <2T + V> vanishes over one period") {
        const auto md = models::build("kepler_quasi");
        const Trajectory traj =
            integrate(md.field, md.default_state, {1e-10, 1e-12, 0, 7.0, 2e-4}, md.guard);
        const auto tau = detect_period(traj, md.period_eps, md.wrap);
        REQUIRE(tau.has_value());
        const auto two_t_plus_v = [&](const Vec& s) {
            const double t = 0.5 * (s[2] * s[2] + s[3] * s[3] / (s[0] * s[0]));
            return 2 * t - 1.0 / s[0];
        };
        const AverageResult r =
            time_average(two_t_plus_v, traj, {AverageMode::Periodic, 1e-3, *tau});
        CHECK(std::abs(r.value) < 1e-6);
    }
    SECTION("period longer than the span is rejected") {
        CHECK_THROWS_AS(time_average([](const Vec&) { return 1.0; }, clock,
                                     {AverageMode::Periodic, 1e-3, 10.0}),
                        PeriodExceedsSpan);
    }
    SECTION("averaging is linear and exact on constants") {
        const auto f1 = [](const Vec& s) { return std::sin(s[0]); };
        const auto f2 = [](const Vec& s) { return s[0] * s[0]; };
        const auto combo = [&](const Vec& s) { return 2.0 * f1(s) - 0.5 * f2(s); };
        const double a1 = time_average(f1, clock).value;
        const double a2 = time_average(f2, clock).value;
        const double ac = time_average(combo, clock).value;
        CHECK(ac == Catch::Approx(2.0 * a1 - 0.5 * a2).margin(1e-13));
    }
}

TEST_CASE("period detection") {
    SECTION("oscillator period 2 pi") {
        const auto md = models::build("oscillator");
        const Trajectory traj =
            integrate(md.field, md.default_state, {1e-10, 1e-12, 0, 15.0, 0.005});
        const auto tau = detect_period(traj, md.period_eps, md.wrap);
        REQUIRE(tau.has_value());
        CHECK(std::abs(*tau - 2 * M_PI) < 1e-6);
    }
    SECTION("Kepler ellipse period from the third law") {
        const auto md = models::build("kepler_quasi");
        const Trajectory traj =
            integrate(md.field, md.default_state, {1e-10, 1e-12, 0, 7.0, 2e-4}, md.guard);
        const auto tau = detect_period(traj, md.period_eps, md.wrap);
        REQUIRE(tau.has_value());
        CHECK(std::abs(*tau - 2 * M_PI) < 1e-5);
    }
    SECTION("linear drift never returns") {
        const Field drift = [](const Vec&) { return Vec(Vec::Ones(1)); };
        const Trajectory traj = integrate(drift, Vec::Zero(1), {1e-10, 1e-12, 0, 10.0, 0.01});
        CHECK_FALSE(detect_period(traj, 1e-2).has_value());
    }
}

TEST_CASE("virial reports") {
    SECTION("periodic orbit: averages and boundary terms vanish") {
        const auto md = models::build("oscillator");
        const Trajectory traj =
            integrate(md.field, md.default_state, {1e-10, 1e-12, 0, 20.0, 0.002});
        const auto tau = detect_period(traj, md.period_eps, md.wrap);
        REQUIRE(tau.has_value());
        const VirialReport rep =
            virial_report(md.virials, traj, {1e-3, tau, 1e-10, 1e-12});
        for (const auto& e : rep.entries) {
            REQUIRE(e.periodic_average.has_value());
            CHECK(std::abs(*e.periodic_average) < 1e-6);
            CHECK_FALSE(e.bound_warning);
        }
    }
    SECTION("heavy top: |<gamma x omega>| is bounded by 2 max|gamma| / T") {
        const auto md = models::build("heavy_top");
        const Trajectory traj = integrate(md.field, md.default_state,
                                          {1e-12, 1e-14, 0, 100.0, 0.01});
        const VirialReport rep = virial_report(md.virials, traj, {1e-3, std::nullopt, 1e-12, 1e-14});
        double max_gamma = 0;
        for (const Vec& s : traj.states) max_gamma = std::max(max_gamma, s.head(3).norm());
        for (const auto& e : rep.entries) {
            if (e.name.rfind("G_gamma", 0) != 0) continue;
            CHECK(std::abs(e.cesaro.value) <= 2 * max_gamma / traj.span() + 10 * e.residual_tol);
        }
    }
    SECTION("unbounded virial function raises the growth warning") {
        // free particle on the line with G = q pi
        FrameField frame = identity_frame(1);
        HamiltonianJet ham;
        ham.value = [](const Vec&, const Vec& pi) { return 0.5 * pi.squaredNorm(); };
        ham.d_base = [](const Vec&, const Vec&) { return Vec(Vec::Zero(1)); };
        ham.d_fibre = [](const Vec&, const Vec& pi) { return pi; };
        BaseVectorSection dil;
        dil.comps = [](const Vec& q) { return q; };
        dil.jac = [](const Vec&) { return Mat(Mat::Identity(1, 1)); };
        const PhaseFunctionJet g = linear_virial_function(dil);
        VirialObservable obs{
            "G_qpi",
            [g](const Vec& s) { return g.value(s.head(1), s.tail(1)); },
            [g, ham, frame](const Vec& s) {
                return virial_integrand_tstarq(g, ham, frame, {s.head(1), s.tail(1)});
            }};
        const Field field = make_tstarq_field(ham, frame);
        const Trajectory traj =
            integrate(field, (Vec(2) << 0.0, 1.0).finished(), {1e-10, 1e-12, 0, 30.0, 0.05});
        const VirialReport rep = virial_report({obs}, traj, {});
        CHECK(rep.entries.front().bound_warning);
        // and a bounded one on the oscillator does not warn
        const auto osc = models::build("oscillator", {}, models::Formalism::Tstarq);
        const Trajectory to =
            integrate(osc.field, osc.default_state, {1e-10, 1e-12, 0, 30.0, 0.05});
        const VirialReport rep2 = virial_report(osc.virials, to, {});
        CHECK_FALSE(rep2.entries.front().bound_warning);
    }
    SECTION("master identity: cesaro average matches the boundary term on every model") {
        struct Case {
            const char* name;
            std::optional<models::Formalism> formalism;
            double t_max;
        };
        const Case cases[] = {
            {"oscillator", std::nullopt, 20.0},
            {"oscillator", models::Formalism::Tstarq, 20.0},
            {"kepler_quasi", std::nullopt, 13.0},
            {"kepler_quasi", models::Formalism::AlgebroidLagrangian, 13.0},
            {"kepler_cotangent", std::nullopt, 13.0},
            {"rigid_body_lagrangian", std::nullopt, 40.0},
            {"rigid_body_hamiltonian", std::nullopt, 40.0},
            {"heavy_top", std::nullopt, 40.0},
        };
        for (const Case& c : cases) {
            const auto md = models::build(c.name, {}, c.formalism);
            IntegratorSettings cfg = md.default_integrator;
            cfg.t_max = c.t_max;
            const Trajectory traj = integrate(md.field, md.default_state, cfg, md.guard);
            const VirialReport rep =
                virial_report(md.virials, traj, {1e-3, std::nullopt, cfg.rtol, cfg.atol});
            for (const auto& e : rep.entries) {
                INFO(c.name << " / " << e.name);
                CHECK(e.residual <= 10 * e.residual_tol);
            }
        }
    }
}
