#include <virial/scenario.hpp>

#include <CLI11.hpp>

#include <atomic>
#include <cstdlib>
#include <iostream>
#include <thread>

namespace {

using namespace virial;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitNumerical = 2;
constexpr int kExitConfig = 3;

int classify(const std::exception& e) {
    if (dynamic_cast<const ConfigError*>(&e)) return kExitConfig;
    if (dynamic_cast<const ValidationFailure*>(&e) || dynamic_cast<const InvalidParams*>(&e) ||
        dynamic_cast<const UnknownModel*>(&e))
        return kExitValidation;
    if (dynamic_cast<const Error*>(&e)) return kExitNumerical;
    return kExitConfig;
}

int cmd_validate(const std::string& path) {
    try {
        const auto cfg = scenario::parse_scenario_file(path);
        const auto prep = scenario::prepare(cfg);
        std::cout << "ok: model " << prep.model.name << " ("
                  << models::to_string(prep.model.formalism) << "), state dim "
                  << prep.initial_state.size() << "\n";
        std::cout << "checks: jets vs finite differences, frame/structure equations, "
                     "guard sanity\n";
        std::cout << "virial functions (" << prep.observables.size() << "):";
        for (const auto& o : prep.observables) std::cout << " " << o.name;
        std::cout << "\nintegrator: rtol " << scenario::fmt17(prep.integrator.rtol) << " atol "
                  << scenario::fmt17(prep.integrator.atol) << " t_max "
                  << scenario::fmt17(prep.integrator.t_max) << " dense_dt "
                  << scenario::fmt17(prep.integrator.dense_dt) << "\n";
        return kExitOk;
    } catch (const std::exception& e) {
        std::cerr << "validate: " << e.what() << "\n";
        return classify(e);
    }
}

int run_one(const std::string& path, const std::string& out_dir,
            const scenario::RunOverrides& over, std::string* message) {
    try {
        const auto cfg = scenario::parse_scenario_file(path);
        auto prep = scenario::prepare(cfg);
        const auto result = scenario::run_prepared(prep, over);
        scenario::write_outputs(out_dir, prep, result);
        std::string msg = "wrote " + out_dir;
        if (result.trajectory.guard_tripped)
            msg += " (guard tripped at t=" +
                   scenario::fmt17(result.trajectory.times.back()) + ", partial outputs)";
        if (message) *message = msg;
        return kExitOk;
    } catch (const std::exception& e) {
        if (message) *message = std::string("error: ") + e.what();
        return classify(e);
    }
}

int cmd_run(const std::string& path, const std::string& out_dir,
            const scenario::RunOverrides& over) {
    std::string msg;
    const int rc = run_one(path, out_dir, over, &msg);
    (rc == kExitOk ? std::cout : std::cerr) << msg << "\n";
    return rc;
}

int cmd_run_batch(const std::string& batch_dir, const std::string& out_dir,
                  const scenario::RunOverrides& over) {
    namespace fs = std::filesystem;
    std::vector<fs::path> files;
    try {
        for (const auto& entry : fs::directory_iterator(batch_dir))
            if (entry.path().extension() == ".json") files.push_back(entry.path());
    } catch (const std::exception& e) {
        std::cerr << "batch: " << e.what() << "\n";
        return kExitConfig;
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) {
        std::cerr << "batch: no scenario files in " << batch_dir << "\n";
        return kExitConfig;
    }

    unsigned workers = std::thread::hardware_concurrency();
    if (const char* cap = std::getenv("VIRIAL_MAX_CONCURRENCY"))
        workers = static_cast<unsigned>(std::max(1, std::atoi(cap)));
    workers = std::min<unsigned>(workers, files.size());

    std::vector<int> codes(files.size(), 0);
    std::vector<std::string> messages(files.size());
    std::atomic<size_t> next{0};
    auto worker = [&] {
        for (size_t i = next.fetch_add(1); i < files.size(); i = next.fetch_add(1)) {
            const std::string stem = files[i].stem().string();
            codes[i] = run_one(files[i].string(), out_dir + "/" + stem, over, &messages[i]);
        }
    };
    std::vector<std::thread> pool;
    for (unsigned i = 0; i + 1 < workers; ++i) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    fs::create_directories(out_dir);
    std::ofstream summary(out_dir + "/batch_summary.json");
    summary << "[\n";
    int rc = kExitOk;
    for (size_t i = 0; i < files.size(); ++i) {
        summary << "  {\"scenario\": \"" << files[i].stem().string() << "\", \"exit\": "
                << codes[i] << ", \"message\": \"" << messages[i] << "\"}"
                << (i + 1 < files.size() ? "," : "") << "\n";
        std::cout << files[i].stem().string() << ": exit " << codes[i] << ": " << messages[i]
                  << "\n";
        rc = std::max(rc, codes[i]);
    }
    summary << "]\n";
    return rc;
}

int cmd_list(bool as_json) {
    const auto infos = models::list_models();
    if (as_json) {
        std::cout << "[\n";
        for (size_t i = 0; i < infos.size(); ++i) {
            const auto& m = infos[i];
            std::cout << "  {\"name\": \"" << m.name << "\", \"description\": \""
                      << m.description << "\",\n   \"formalisms\": [";
            for (size_t k = 0; k < m.formalisms.size(); ++k)
                std::cout << (k ? ", " : "") << "\"" << models::to_string(m.formalisms[k])
                          << "\"";
            std::cout << "],\n   \"params\": {";
            bool first = true;
            for (const auto& [k, v] : m.default_params) {
                std::cout << (first ? "" : ", ") << "\"" << k << "\": " << scenario::fmt17(v);
                first = false;
            }
            std::cout << "},\n   \"state\": [";
            for (size_t k = 0; k < m.state_names.size(); ++k)
                std::cout << (k ? ", " : "") << "\"" << m.state_names[k] << "\"";
            std::cout << "],\n   \"virials\": [";
            for (size_t k = 0; k < m.virial_names.size(); ++k)
                std::cout << (k ? ", " : "") << "\"" << m.virial_names[k] << "\"";
            std::cout << "],\n   \"default_scenario\": {\"model\": {\"name\": \"" << m.name
                      << "\"}, \"formalism\": \"" << models::to_string(m.formalisms.front())
                      << "\"}}" << (i + 1 < infos.size() ? "," : "") << "\n";
        }
        std::cout << "]\n";
    } else {
        for (const auto& m : infos) {
            std::cout << m.name << "  [";
            for (size_t k = 0; k < m.formalisms.size(); ++k)
                std::cout << (k ? " " : "") << models::to_string(m.formalisms[k]);
            std::cout << "]  " << m.description << "\n    params:";
            for (const auto& [k, v] : m.default_params)
                std::cout << " " << k << "=" << v;
            std::cout << "\n    virials:";
            for (const auto& v : m.virial_names) std::cout << " " << v;
            std::cout << "\n";
        }
    }
    return kExitOk;
}

int cmd_check(const std::string& name) {
    try {
        const auto md = models::build(name);
        std::cout << "ok: " << md.name << " (" << models::to_string(md.formalism)
                  << ") passed jet and frame validation";
        if (md.alg_l || md.alg_h) {
            const auto& a = md.alg_l ? md.alg_l->algebroid : md.alg_h->algebroid;
            const auto res = check_structure_equations(a, [&] {
                std::vector<Vec> pts;
                for (const Vec& s : md.sample_states(8)) pts.push_back(s.head(a.dim_base));
                return pts;
            }());
            std::cout << "; structure residuals: anchor " << scenario::fmt17(res.anchor)
                      << ", jacobi " << scenario::fmt17(res.jacobi);
        }
        std::cout << "\n";
        return kExitOk;
    } catch (const std::exception& e) {
        std::cerr << "check: " << e.what() << "\n";
        return classify(e);
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"geometric mechanics engine: quasi-coordinate and Lie-algebroid dynamics "
                 "with virial-theorem diagnostics"};
    app.require_subcommand(1);

    std::string scenario_path, out_dir, batch_dir, model_name, period_text;
    double tmax_override = 0;
    bool as_json = false;

    auto* validate = app.add_subcommand("validate", "check a scenario file without integrating");
    validate->add_option("--scenario", scenario_path, "scenario JSON path")->required();

    auto* run = app.add_subcommand("run", "integrate a scenario and write artifacts");
    auto* opt_scenario = run->add_option("--scenario", scenario_path, "scenario JSON path");
    auto* opt_batch = run->add_option("--batch", batch_dir, "directory of scenario files");
    run->add_option("--out", out_dir, "output directory")->required();
    auto* opt_tmax = run->add_option("--tmax", tmax_override, "override integration span");
    run->add_option("--period", period_text, "override period mode: auto|none|<value>");
    opt_scenario->excludes(opt_batch);

    auto* list = app.add_subcommand("list-models", "print the model registry");
    list->add_flag("--json", as_json, "machine-readable output");

    auto* check = app.add_subcommand("check", "build a model and run its validation only");
    check->add_option("--model", model_name, "model name")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    scenario::RunOverrides over;
    if (opt_tmax->count()) over.t_max = tmax_override;
    if (!period_text.empty()) over.period = period_text;

    if (validate->parsed()) return cmd_validate(scenario_path);
    if (run->parsed()) {
        if (!batch_dir.empty()) return cmd_run_batch(batch_dir, out_dir, over);
        if (scenario_path.empty()) {
            std::cerr << "run: --scenario or --batch is required\n";
            return kExitConfig;
        }
        return cmd_run(scenario_path, out_dir, over);
    }
    if (list->parsed()) return cmd_list(as_json);
    if (check->parsed()) return cmd_check(model_name);
    return kExitConfig;
}
