#include <json.hpp>

#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

// End-to-end exercises of the command-line front end: exit-code contract,
// artifact files, determinism, and the shipped scenario directory.

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

const std::string kCli = VIRIAL_CLI_PATH;
const std::string kScenarioDir = VIRIAL_SCENARIO_DIR;

struct CmdResult {
    int exit_code;
    std::string output;
};

CmdResult run_cmd(const std::string& args, const std::string& env_prefix = "") {
    const fs::path out_file = fs::temp_directory_path() / "virial_cli_out.txt";
    const std::string cmd = env_prefix + kCli + " " + args + " > " + out_file.string() + " 2>&1";
    const int raw = std::system(cmd.c_str());
    std::ifstream in(out_file);
    std::stringstream ss;
    ss << in.rdbuf();
    return {WEXITSTATUS(raw), ss.str()};
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream out(p);
    out << text;
}

}  // namespace

TEST_CASE("validate exit codes") {
    SECTION("shipped scenario validates cleanly") {
        const CmdResult r = run_cmd("validate --scenario " + kScenarioDir + "/kepler_ellipse.json");
        INFO(r.output);
        CHECK(r.exit_code == 0);
        CHECK(r.output.find("G_dilation") != std::string::npos);
    }
    SECTION("negative inertia fails validation with exit 1") {
        const fs::path dir = fresh_dir("virial_bad_scenario");
        write_file(dir / "bad.json", R"({
            "model": {"name": "rigid_body_lagrangian", "params": {"I2": -2.0}},
            "formalism": "algebroid_l"
        })");
        const CmdResult r = run_cmd("validate --scenario " + (dir / "bad.json").string());
        CHECK(r.exit_code == 1);
        CHECK(r.output.find("inertia") != std::string::npos);
    }
    SECTION("missing file is a config error with exit 3") {
        const CmdResult r = run_cmd("validate --scenario /nonexistent/path.json");
        CHECK(r.exit_code == 3);
    }
    SECTION("command-line misuse is a config error, help exits cleanly") {
        CHECK(run_cmd("frobnicate").exit_code == 3);
        CHECK(run_cmd("run --scenario x.json").exit_code == 3);  // --out missing
        CHECK(run_cmd("--help").exit_code == 0);
    }
    SECTION("unknown virial name fails") {
        const fs::path dir = fresh_dir("virial_bad_virial");
        write_file(dir / "bad.json", R"({
            "model": {"name": "oscillator"},
            "virial": ["G_nope"]
        })");
        const CmdResult r = run_cmd("validate --scenario " + (dir / "bad.json").string());
        CHECK(r.exit_code == 3);
        CHECK(r.output.find("G_nope") != std::string::npos);
    }
}

TEST_CASE("run produces the artifact files") {
    const fs::path out = fresh_dir("virial_run_osc");
    const CmdResult r =
        run_cmd("run --scenario " + kScenarioDir + "/oscillator.json --out " + out.string());
    INFO(r.output);
    REQUIRE(r.exit_code == 0);
    CHECK(fs::exists(out / "trajectory.csv"));
    CHECK(fs::exists(out / "convergence.csv"));
    CHECK(fs::exists(out / "report.json"));

    SECTION("report parses and carries the expected fields") {
        const json rep = json::parse(slurp(out / "report.json"));
        CHECK(rep["model"] == "oscillator");
        CHECK(rep["guard_tripped"] == false);
        CHECK(rep["period"].is_number());
        CHECK(std::abs(rep["period"].get<double>() - 2 * M_PI) < 1e-6);
        REQUIRE(rep["virials"].is_array());
        for (const auto& v : rep["virials"]) {
            const double residual = v["self_consistency_residual"].get<double>();
            const double tol = v["residual_tolerance"].get<double>();
            CHECK(residual <= 10 * tol);
            CHECK(std::abs(v["periodic_average"].get<double>()) < 1e-6);
        }
        for (const auto& c : rep["conserved"])
            CHECK(c["max_drift"].get<double>() < 1e-7);
    }
    SECTION("trajectory header names the state, energy and virial columns") {
        std::ifstream in(out / "trajectory.csv");
        std::string header;
        std::getline(in, header);
        CHECK(header == "t,q,w,E,G_dilation,dG_dilation_dt");
    }
    SECTION("reruns are byte-identical") {
        const fs::path out2 = fresh_dir("virial_run_osc2");
        const CmdResult r2 =
            run_cmd("run --scenario " + kScenarioDir + "/oscillator.json --out " + out2.string());
        REQUIRE(r2.exit_code == 0);
        CHECK(slurp(out / "trajectory.csv") == slurp(out2 / "trajectory.csv"));
        CHECK(slurp(out / "convergence.csv") == slurp(out2 / "convergence.csv"));
        CHECK(slurp(out / "report.json") == slurp(out2 / "report.json"));
    }
}

TEST_CASE("every shipped scenario satisfies the report self-consistency bound") {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(kScenarioDir))
        if (entry.path().extension() == ".json") files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    REQUIRE_FALSE(files.empty());
    for (const auto& file : files) {
        const fs::path out = fresh_dir("virial_ship_" + file.stem().string());
        const CmdResult r = run_cmd("run --scenario " + file.string() + " --out " + out.string());
        INFO(file.string() << "\n" << r.output);
        REQUIRE(r.exit_code == 0);
        const json rep = json::parse(slurp(out / "report.json"));
        for (const auto& v : rep["virials"]) {
            INFO(file.stem().string() << " / " << v["name"].get<std::string>());
            CHECK(v["self_consistency_residual"].get<double>() <=
                  10 * v["residual_tolerance"].get<double>());
        }
    }
}

TEST_CASE("run overrides and guard reporting") {
    SECTION("--tmax and --period none override the scenario") {
        const fs::path out = fresh_dir("virial_run_tmax");
        const CmdResult r = run_cmd("run --scenario " + kScenarioDir +
                                    "/oscillator.json --out " + out.string() +
                                    " --tmax 30 --period none");
        REQUIRE(r.exit_code == 0);
        const json rep = json::parse(slurp(out / "report.json"));
        CHECK(rep["t_end"].get<double>() == 30.0);
        CHECK(rep["period"].is_null());
    }
    SECTION("a guard trip before the first dense sample still reports cleanly") {
        const fs::path dir = fresh_dir("virial_guard_early");
        write_file(dir / "early.json", R"({
            "model": {"name": "kepler_quasi"},
            "initial_state": [0.0011, 0.0, -10.0, 0.0],
            "integrator": {"rtol": 1e-8, "atol": 1e-10, "t_max": 1.0, "dense_dt": 0.01},
            "averaging": {"period": "none"}
        })");
        const fs::path out = fresh_dir("virial_guard_early_out");
        const CmdResult r =
            run_cmd("run --scenario " + (dir / "early.json").string() + " --out " + out.string());
        INFO(r.output);
        REQUIRE(r.exit_code == 0);
        const json rep = json::parse(slurp(out / "report.json"));
        CHECK(rep["guard_tripped"] == true);
        CHECK(rep["t_end"].get<double>() < 0.01);
    }
    SECTION("guard trip yields partial outputs and exit 0") {
        const fs::path dir = fresh_dir("virial_guard_scn");
        write_file(dir / "infall.json", R"({
            "model": {"name": "kepler_quasi"},
            "initial_state": [1.0, 0.0, -1.0, 0.0],
            "integrator": {"rtol": 1e-10, "atol": 1e-12, "t_max": 10.0, "dense_dt": 0.001},
            "averaging": {"period": "none"}
        })");
        const fs::path out = fresh_dir("virial_guard_out");
        const CmdResult r =
            run_cmd("run --scenario " + (dir / "infall.json").string() + " --out " + out.string());
        INFO(r.output);
        REQUIRE(r.exit_code == 0);
        const json rep = json::parse(slurp(out / "report.json"));
        CHECK(rep["guard_tripped"] == true);
        CHECK(rep["t_end"].get<double>() < 10.0);
    }
    SECTION("numerical failure exits with 2") {
        const fs::path dir = fresh_dir("virial_numfail");
        // at r = 2e6 the fibre Hessian diag(m, m/r^2) exceeds the condition
        // cap, so the flow evaluation reports a degenerate Lagrangian
        write_file(dir / "degenerate.json", R"({
            "model": {"name": "kepler_quasi"},
            "initial_state": [2.0e6, 0.0, 0.0, 0.0],
            "integrator": {"rtol": 1e-8, "atol": 1e-10, "t_max": 1.0, "dense_dt": 0.005}
        })");
        const CmdResult r = run_cmd("run --scenario " + (dir / "degenerate.json").string() +
                                    " --out " + fresh_dir("virial_numfail_out").string());
        INFO(r.output);
        CHECK(r.exit_code == 2);
    }
}

TEST_CASE("list-models and check") {
    SECTION("table lists all models with virials") {
        const CmdResult r = run_cmd("list-models");
        CHECK(r.exit_code == 0);
        for (const char* name :
             {"oscillator", "kepler_quasi", "kepler_cotangent", "rigid_body_lagrangian",
              "rigid_body_hamiltonian", "heavy_top"})
            CHECK(r.output.find(name) != std::string::npos);
        CHECK(r.output.find("G_dilation") != std::string::npos);
    }
    SECTION("json mode round-trips through validate") {
        const CmdResult r = run_cmd("list-models --json");
        REQUIRE(r.exit_code == 0);
        const json listing = json::parse(r.output);
        REQUIRE(listing.is_array());
        REQUIRE_FALSE(listing.empty());
        const fs::path dir = fresh_dir("virial_roundtrip");
        for (const auto& entry : listing) {
            CHECK_FALSE(entry["virials"].empty());
            const fs::path scn = dir / (entry["name"].get<std::string>() + ".json");
            write_file(scn, entry["default_scenario"].dump());
            const CmdResult v = run_cmd("validate --scenario " + scn.string());
            INFO(entry["name"].get<std::string>() << ": " << v.output);
            CHECK(v.exit_code == 0);
        }
    }
    SECTION("check runs model validation only") {
        CHECK(run_cmd("check --model rigid_body_lagrangian").exit_code == 0);
        CHECK(run_cmd("check --model heavy_top").exit_code == 0);
        CHECK(run_cmd("check --model no_such_model").exit_code == 1);
    }
}

TEST_CASE("explicit period and linear virial entries") {
    const fs::path dir = fresh_dir("virial_linear_scn");
    write_file(dir / "rigid.json", R"({
        "model": {"name": "rigid_body_lagrangian"},
        "initial_state": [1.0, 1.0, 1.0],
        "integrator": {"rtol": 1e-12, "atol": 1e-14, "t_max": 20.0, "dense_dt": 0.01},
        "averaging": {"period": 6.4227030843},
        "virial": ["G_momentum_1", {"name": "G_diag", "linear": [1.0, 1.0, 1.0]}]
    })");
    const fs::path out = fresh_dir("virial_linear_out");
    const CmdResult r =
        run_cmd("run --scenario " + (dir / "rigid.json").string() + " --out " + out.string());
    INFO(r.output);
    REQUIRE(r.exit_code == 0);
    const json rep = json::parse(slurp(out / "report.json"));
    REQUIRE(rep["virials"].size() == 2);
    CHECK(rep["virials"][0]["name"] == "G_momentum_1");
    CHECK(rep["virials"][1]["name"] == "G_diag");
    CHECK(rep["period"].get<double>() == 6.4227030843);
    for (const auto& v : rep["virials"]) {
        // the supplied value is the polhode period, so periodic averages vanish
        CHECK(std::abs(v["periodic_average"].get<double>()) < 1e-5);
        CHECK(v["self_consistency_residual"].get<double>() <=
              10 * v["residual_tolerance"].get<double>());
    }
}

TEST_CASE("batch mode") {
    const fs::path dir = fresh_dir("virial_batch_in");
    for (const char* name : {"oscillator.json", "kepler_ellipse.json"})
        fs::copy_file(fs::path(kScenarioDir) / name, dir / name);
    const fs::path out = fresh_dir("virial_batch_out");
    // pin the worker count through the documented environment variable
    const CmdResult r = run_cmd("run --batch " + dir.string() + " --out " + out.string(),
                                "VIRIAL_MAX_CONCURRENCY=1 ");
    INFO(r.output);
    REQUIRE(r.exit_code == 0);
    CHECK(fs::exists(out / "batch_summary.json"));
    CHECK(fs::exists(out / "oscillator" / "report.json"));
    CHECK(fs::exists(out / "kepler_ellipse" / "report.json"));
    const json summary = json::parse(slurp(out / "batch_summary.json"));
    REQUIRE(summary.size() == 2);
    CHECK(summary[0]["scenario"] == "kepler_ellipse");  // sorted order
    CHECK(summary[1]["scenario"] == "oscillator");

    SECTION("a broken scenario surfaces through the summary and exit code") {
        write_file(dir / "broken.json", R"({"model": {"name": "no_such_model"}})");
        const fs::path out2 = fresh_dir("virial_batch_out2");
        const CmdResult r2 = run_cmd("run --batch " + dir.string() + " --out " + out2.string());
        CHECK(r2.exit_code == 1);
        const json summary2 = json::parse(slurp(out2 / "batch_summary.json"));
        REQUIRE(summary2.size() == 3);
        CHECK(summary2[0]["scenario"] == "broken");
        CHECK(summary2[0]["exit"] == 1);
        CHECK(summary2[1]["exit"] == 0);
    }
}
