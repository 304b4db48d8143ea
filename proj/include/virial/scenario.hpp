#pragma once

#include <virial/models.hpp>

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace virial::scenario {

// All floating-point output is serialized with 17 significant digits so that
// values round-trip exactly through the text artifacts.
inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct VirialSelection {
    bool all = true;
    std::vector<std::string> names;
    std::vector<std::pair<std::string, Vec>> linear;  // constant-coefficient sections
};

struct ScenarioConfig {
    std::string model;
    std::map<std::string, double> params;
    models::Formalism formalism = models::Formalism::Tq;
    std::optional<Vec> initial_state;
    std::map<std::string, double> initial_overrides;  // by state name
    std::optional<IntegratorSettings> integrator;     // absent: model default
    std::string averaging_mode = "cesaro";            // cesaro | periodic
    double convergence_tol = 1e-3;
    std::string period_mode = "auto";                 // auto | none | value
    double period_value = 0;
    std::optional<double> period_eps;
    VirialSelection virial;
    std::vector<std::string> formats = {"csv", "json"};
    std::optional<int> trajectory_stride;
};

namespace detail {

using nlohmann::json;

inline json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ConfigError("cannot parse '" + path + "': " + e.what());
    }
    return j;
}

inline double as_number(const json& j, const std::string& what) {
    if (!j.is_number()) throw ConfigError(what + " must be a number");
    return j.get<double>();
}

}  // namespace detail

inline ScenarioConfig parse_scenario(const nlohmann::json& j) {
    using detail::as_number;
    ScenarioConfig cfg;
    if (!j.is_object()) throw ConfigError("scenario must be a JSON object");
    if (!j.contains("model") || !j["model"].is_object() || !j["model"].contains("name"))
        throw ConfigError("scenario requires model.name");
    cfg.model = j["model"]["name"].get<std::string>();
    if (j["model"].contains("params")) {
        if (!j["model"]["params"].is_object())
            throw ConfigError("model.params must be an object");
        for (const auto& [k, v] : j["model"]["params"].items())
            cfg.params[k] = as_number(v, "model.params." + k);
    }
    cfg.formalism = j.contains("formalism")
                        ? models::parse_formalism(j["formalism"].get<std::string>())
                        : models::default_formalism(cfg.model);

    if (j.contains("initial_state")) {
        const auto& s = j["initial_state"];
        if (s.is_array()) {
            Vec v(s.size());
            for (size_t i = 0; i < s.size(); ++i)
                v[static_cast<int>(i)] = as_number(s[i], "initial_state");
            cfg.initial_state = v;
        } else if (s.is_object()) {
            for (const auto& [k, v] : s.items())
                cfg.initial_overrides[k] = as_number(v, "initial_state." + k);
        } else {
            throw ConfigError("initial_state must be an array or an object");
        }
    }

    if (j.contains("integrator")) {
        const auto& it = j["integrator"];
        if (!it.is_object()) throw ConfigError("integrator must be an object");
        IntegratorSettings s;
        if (it.contains("rtol")) s.rtol = as_number(it["rtol"], "integrator.rtol");
        if (it.contains("atol")) s.atol = as_number(it["atol"], "integrator.atol");
        if (it.contains("max_step")) s.max_step = as_number(it["max_step"], "integrator.max_step");
        if (it.contains("t_max")) s.t_max = as_number(it["t_max"], "integrator.t_max");
        if (it.contains("dense_dt")) s.dense_dt = as_number(it["dense_dt"], "integrator.dense_dt");
        cfg.integrator = s;
    }

    if (j.contains("averaging")) {
        const auto& av = j["averaging"];
        if (av.contains("mode")) {
            cfg.averaging_mode = av["mode"].get<std::string>();
            if (cfg.averaging_mode != "cesaro" && cfg.averaging_mode != "periodic")
                throw ConfigError("averaging.mode must be cesaro or periodic");
        }
        if (av.contains("convergence_tol"))
            cfg.convergence_tol = as_number(av["convergence_tol"], "averaging.convergence_tol");
        if (av.contains("period")) {
            const auto& p = av["period"];
            if (p.is_string()) {
                cfg.period_mode = p.get<std::string>();
                if (cfg.period_mode != "auto" && cfg.period_mode != "none")
                    throw ConfigError("averaging.period must be auto, none, or a number");
            } else {
                cfg.period_mode = "value";
                cfg.period_value = as_number(p, "averaging.period");
            }
        }
        if (av.contains("period_eps"))
            cfg.period_eps = as_number(av["period_eps"], "averaging.period_eps");
    }

    if (j.contains("virial")) {
        const auto& vi = j["virial"];
        if (vi.is_string()) {
            if (vi.get<std::string>() != "all")
                throw ConfigError("virial must be \"all\" or a list");
        } else if (vi.is_array()) {
            cfg.virial.all = false;
            for (const auto& entry : vi) {
                if (entry.is_string()) {
                    cfg.virial.names.push_back(entry.get<std::string>());
                } else if (entry.is_object() && entry.contains("linear")) {
                    const auto& coeffs = entry["linear"];
                    if (!coeffs.is_array()) throw ConfigError("virial linear must be an array");
                    Vec c(coeffs.size());
                    for (size_t i = 0; i < coeffs.size(); ++i)
                        c[static_cast<int>(i)] = detail::as_number(coeffs[i], "virial.linear");
                    std::string name = entry.contains("name")
                                           ? entry["name"].get<std::string>()
                                           : "G_linear_" + std::to_string(cfg.virial.linear.size());
                    cfg.virial.linear.emplace_back(name, c);
                } else {
                    throw ConfigError("virial entries must be names or {name, linear}");
                }
            }
        } else {
            throw ConfigError("virial must be \"all\" or a list");
        }
    }

    if (j.contains("outputs")) {
        const auto& out = j["outputs"];
        if (out.contains("formats")) {
            cfg.formats.clear();
            for (const auto& f : out["formats"]) {
                const std::string fmt = f.get<std::string>();
                if (fmt != "csv" && fmt != "json")
                    throw ConfigError("outputs.formats entries must be csv or json");
                cfg.formats.push_back(fmt);
            }
        }
        if (out.contains("trajectory_stride")) {
            cfg.trajectory_stride = out["trajectory_stride"].get<int>();
            if (*cfg.trajectory_stride < 1)
                throw ConfigError("outputs.trajectory_stride must be >= 1");
        }
    }
    return cfg;
}

inline ScenarioConfig parse_scenario_file(const std::string& path) {
    return parse_scenario(detail::load_json(path));
}

// Model build + virial resolution + integrator-settings check, no integration.
struct PreparedScenario {
    ScenarioConfig cfg;
    models::ModelDescriptor model;
    Vec initial_state;
    IntegratorSettings integrator;
    std::vector<VirialObservable> observables;
};

inline PreparedScenario prepare(const ScenarioConfig& cfg) {
    PreparedScenario prep;
    prep.cfg = cfg;
    prep.model = models::build(cfg.model, cfg.params, cfg.formalism);

    prep.initial_state = prep.model.default_state;
    if (cfg.initial_state) {
        if (cfg.initial_state->size() != prep.model.default_state.size())
            throw ConfigError("initial_state has dimension " +
                              std::to_string(cfg.initial_state->size()) + ", expected " +
                              std::to_string(prep.model.default_state.size()));
        prep.initial_state = *cfg.initial_state;
    }
    for (const auto& [name, value] : cfg.initial_overrides) {
        const auto it = std::find(prep.model.state_names.begin(),
                                  prep.model.state_names.end(), name);
        if (it == prep.model.state_names.end())
            throw ConfigError("unknown state component '" + name + "'");
        prep.initial_state[it - prep.model.state_names.begin()] = value;
    }
    if (!prep.model.guard(prep.initial_state))
        throw ValidationFailure("initial state fails the model's domain guard");

    prep.integrator = cfg.integrator.value_or(prep.model.default_integrator);
    validate_settings(prep.integrator);

    if (cfg.virial.all) {
        prep.observables = prep.model.virials;
    } else {
        for (const std::string& name : cfg.virial.names) {
            const auto it =
                std::find_if(prep.model.virials.begin(), prep.model.virials.end(),
                             [&](const VirialObservable& o) { return o.name == name; });
            if (it == prep.model.virials.end())
                throw ConfigError("virial function '" + name + "' is not registered for model '" +
                                  cfg.model + "' (" + models::to_string(cfg.formalism) + ")");
            prep.observables.push_back(*it);
        }
    }
    for (const auto& [name, coeffs] : cfg.virial.linear)
        prep.observables.push_back(models::linear_virial(prep.model, name, coeffs));
    return prep;
}

struct ConservedDrift {
    std::string name;
    double initial;
    double final_value;
    double max_drift;
};

struct RunResult {
    Trajectory trajectory;
    VirialReport report;
    std::optional<double> period;
    bool period_detected = false;
    std::vector<ConservedDrift> conserved;
};

struct RunOverrides {
    std::optional<double> t_max;
    std::optional<std::string> period;  // auto | none | number as text
};

inline RunResult run_prepared(PreparedScenario& prep, const RunOverrides& over = {}) {
    ScenarioConfig& cfg = prep.cfg;
    if (over.t_max) {
        prep.integrator.t_max = *over.t_max;
        validate_settings(prep.integrator);
    }
    if (over.period) {
        if (*over.period == "auto" || *over.period == "none") {
            cfg.period_mode = *over.period;
        } else {
            cfg.period_mode = "value";
            try {
                cfg.period_value = std::stod(*over.period);
            } catch (const std::exception&) {
                throw ConfigError("--period expects auto, none, or a number");
            }
        }
    }

    RunResult result;
    result.trajectory = integrate(prep.model.field, prep.initial_state, prep.integrator,
                                  prep.model.guard);
    if (prep.model.post_process) prep.model.post_process(result.trajectory);

    if (cfg.period_mode == "auto") {
        result.period = detect_period(result.trajectory,
                                      cfg.period_eps.value_or(prep.model.period_eps),
                                      prep.model.wrap);
        result.period_detected = result.period.has_value();
    } else if (cfg.period_mode == "value") {
        result.period = cfg.period_value;
    }

    ReportOptions opts;
    opts.convergence_tol = cfg.convergence_tol;
    opts.period = result.period;
    opts.rtol = prep.integrator.rtol;
    opts.atol = prep.integrator.atol;
    // a guard trip on the very first step leaves nothing to average over
    if (result.trajectory.size() >= 2)
        result.report = virial_report(prep.observables, result.trajectory, opts);

    auto drift_of = [&](const std::string& name,
                        const std::function<double(const Vec&)>& f) {
        ConservedDrift d{name, f(result.trajectory.states.front()),
                         f(result.trajectory.states.back()), 0};
        for (const Vec& s : result.trajectory.states)
            d.max_drift = std::max(d.max_drift, std::abs(f(s) - d.initial));
        return d;
    };
    result.conserved.push_back(drift_of("energy", prep.model.energy));
    for (const auto& c : prep.model.conserved) result.conserved.push_back(drift_of(c.name, c.value));
    return result;
}

// ---------------------------------------------------------------------------
// Writers. CSVs and the report are deterministic for a fixed config and build.
// ---------------------------------------------------------------------------

inline void write_trajectory_csv(const std::string& path, const PreparedScenario& prep,
                                 const RunResult& run) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write '" + path + "'");
    out << "t";
    for (const auto& n : prep.model.state_names) out << "," << n;
    out << ",E";
    for (const auto& o : prep.observables) out << "," << o.name << ",d" << o.name << "_dt";
    out << "\n";

    const Trajectory& traj = run.trajectory;
    const size_t n = traj.size();
    size_t stride = prep.cfg.trajectory_stride
                        ? static_cast<size_t>(*prep.cfg.trajectory_stride)
                        : std::max<size_t>(1, (n - 1 + 4999) / 5000);
    for (size_t k = 0; k < n; k += stride) {
        const size_t idx = std::min(k, n - 1);
        out << fmt17(traj.times[idx]);
        for (int i = 0; i < traj.states[idx].size(); ++i)
            out << "," << fmt17(traj.states[idx][i]);
        out << "," << fmt17(prep.model.energy(traj.states[idx]));
        for (const auto& o : prep.observables)
            out << "," << fmt17(o.value(traj.states[idx]))
                << "," << fmt17(o.integrand(traj.states[idx]));
        out << "\n";
        if (idx != n - 1 && idx + stride >= n) {  // always include the endpoint
            out << fmt17(traj.times[n - 1]);
            for (int i = 0; i < traj.states[n - 1].size(); ++i)
                out << "," << fmt17(traj.states[n - 1][i]);
            out << "," << fmt17(prep.model.energy(traj.states[n - 1]));
            for (const auto& o : prep.observables)
                out << "," << fmt17(o.value(traj.states[n - 1]))
                    << "," << fmt17(o.integrand(traj.states[n - 1]));
            out << "\n";
        }
    }
}

inline void write_convergence_csv(const std::string& path, const PreparedScenario& prep,
                                  const RunResult& run) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write '" + path + "'");
    out << "T";
    for (const auto& o : prep.observables) out << ",avg_" << o.name;
    out << "\n";
    std::vector<std::vector<std::pair<double, double>>> series;
    for (const auto& o : prep.observables)
        series.push_back(running_average(o.integrand, run.trajectory));
    if (series.empty() || series.front().empty()) return;
    const size_t n = series.front().size();
    const size_t stride = std::max<size_t>(1, (n - 1 + 999) / 1000);
    for (size_t k = 0; k < n; k += stride) {
        const size_t idx = std::min(k, n - 1);
        out << fmt17(series.front()[idx].first);
        for (const auto& s : series) out << "," << fmt17(s[idx].second);
        out << "\n";
    }
    if ((n - 1) % stride != 0) {
        out << fmt17(series.front()[n - 1].first);
        for (const auto& s : series) out << "," << fmt17(s[n - 1].second);
        out << "\n";
    }
}

inline void write_report_json(const std::string& path, const PreparedScenario& prep,
                              const RunResult& run) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write '" + path + "'");
    const auto b = [](bool v) { return v ? "true" : "false"; };

    out << "{\n";
    out << "  \"model\": \"" << prep.model.name << "\",\n";
    out << "  \"formalism\": \"" << models::to_string(prep.model.formalism) << "\",\n";
    out << "  \"params\": {";
    bool first = true;
    for (const auto& [k, v] : prep.model.params) {
        out << (first ? "" : ", ") << "\"" << k << "\": " << fmt17(v);
        first = false;
    }
    out << "},\n";
    out << "  \"integrator\": {\"rtol\": " << fmt17(prep.integrator.rtol)
        << ", \"atol\": " << fmt17(prep.integrator.atol)
        << ", \"t_max\": " << fmt17(prep.integrator.t_max)
        << ", \"dense_dt\": " << fmt17(prep.integrator.dense_dt) << "},\n";
    out << "  \"guard_tripped\": " << b(run.trajectory.guard_tripped) << ",\n";
    out << "  \"t_end\": " << fmt17(run.trajectory.times.back()) << ",\n";
    out << "  \"period\": ";
    if (run.period) out << fmt17(*run.period);
    else out << "null";
    out << ",\n";
    out << "  \"period_mode\": \"" << prep.cfg.period_mode << "\",\n";
    out << "  \"averaging_mode\": \"" << prep.cfg.averaging_mode << "\",\n";
    out << "  \"stats\": {\"accepted\": " << run.trajectory.stats.accepted
        << ", \"rejected\": " << run.trajectory.stats.rejected
        << ", \"field_evals\": " << run.trajectory.stats.field_evals
        << ", \"min_step\": " << fmt17(run.trajectory.stats.min_step)
        << ", \"max_step\": " << fmt17(run.trajectory.stats.max_step) << "},\n";

    out << "  \"conserved\": [\n";
    for (size_t i = 0; i < run.conserved.size(); ++i) {
        const auto& c = run.conserved[i];
        out << "    {\"name\": \"" << c.name << "\", \"initial\": " << fmt17(c.initial)
            << ", \"final\": " << fmt17(c.final_value)
            << ", \"max_drift\": " << fmt17(c.max_drift) << "}"
            << (i + 1 < run.conserved.size() ? "," : "") << "\n";
    }
    out << "  ],\n";

    out << "  \"virials\": [\n";
    for (size_t i = 0; i < run.report.entries.size(); ++i) {
        const auto& e = run.report.entries[i];
        out << "    {\"name\": \"" << e.name << "\",\n";
        out << "     \"cesaro_average\": " << fmt17(e.cesaro.value)
            << ", \"half_average\": " << fmt17(e.cesaro.half_value)
            << ", \"converged\": " << b(e.cesaro.converged) << ",\n";
        out << "     \"periodic_average\": ";
        if (e.periodic_average) out << fmt17(*e.periodic_average);
        else out << "null";
        out << ",\n";
        out << "     \"boundary_term\": " << fmt17(e.boundary_term)
            << ", \"self_consistency_residual\": " << fmt17(e.residual)
            << ", \"residual_tolerance\": " << fmt17(e.residual_tol) << ",\n";
        out << "     \"max_abs_G\": " << fmt17(e.max_abs_g)
            << ", \"bound_warning\": " << b(e.bound_warning) << "}"
            << (i + 1 < run.report.entries.size() ? "," : "") << "\n";
    }
    out << "  ]\n";
    out << "}\n";
}

inline void write_outputs(const std::string& out_dir, const PreparedScenario& prep,
                          const RunResult& run) {
    std::filesystem::create_directories(out_dir);
    const auto has = [&](const char* f) {
        return std::find(prep.cfg.formats.begin(), prep.cfg.formats.end(), f) !=
               prep.cfg.formats.end();
    };
    if (has("csv")) {
        write_trajectory_csv(out_dir + "/trajectory.csv", prep, run);
        write_convergence_csv(out_dir + "/convergence.csv", prep, run);
    }
    if (has("json")) write_report_json(out_dir + "/report.json", prep, run);
}

}  // namespace virial::scenario
