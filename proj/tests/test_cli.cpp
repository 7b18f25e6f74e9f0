#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"

#include "tvblf/manifest.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Paths are injected by the test harness: the built binary, the shipped
// configs, and a scratch directory for artifacts and captured streams.
std::string from_env(const char* name) {
    const char* v = std::getenv(name);
    REQUIRE_MESSAGE(v != nullptr, name << " must be set");
    return v;
}

const std::string& cli() {
    static const std::string path = from_env("TVBLF_CLI");
    return path;
}

const fs::path& config_dir() {
    static const fs::path dir = from_env("TVBLF_CONFIG_DIR");
    return dir;
}

const fs::path& scratch() {
    static const fs::path dir = [] {
        fs::path d = from_env("TVBLF_SCRATCH");
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

std::string read_file(const fs::path& p) {
    std::ifstream in(p);
    REQUIRE_MESSAGE(in.good(), "cannot read " << p.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

long line_count(const std::string& text) {
    long n = 0;
    for (char c : text)
        if (c == '\n') ++n;
    return n;
}

std::string first_line(const std::string& text) {
    return text.substr(0, text.find('\n'));
}

struct CmdResult {
    int code = -1;
    std::string out;
    std::string err;
};

// Runs the binary with stdout/stderr captured into tag-named scratch files.
CmdResult run_cli(const std::string& args, const std::string& tag) {
    const fs::path outFile = scratch() / (tag + ".out");
    const fs::path errFile = scratch() / (tag + ".err");
    const std::string command =
        q(cli()) + " " + args + " > " + q(outFile) + " 2> " + q(errFile);
    const int raw = std::system(command.c_str());
    CmdResult res;
    res.code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    res.out = read_file(outFile);
    res.err = read_file(errFile);
    return res;
}

const fs::path& bench_config() {
    static const fs::path p = config_dir() / "helicopter_quanser.json";
    return p;
}

// Bench config with the input envelope shrunk far below the demand: loads and
// simulates, but cannot be certified.
const fs::path& starved_config() {
    static const fs::path p = [] {
        json cfg = json::parse(read_file(bench_config()));
        cfg["envelopes"]["phi_tau"]["phi0"] = 0.06;
        cfg["envelopes"]["phi_tau"]["phiInf"] = 0.05;
        fs::path path = scratch() / "starved.json";
        std::ofstream out(path);
        out << cfg.dump(2) << "\n";
        return path;
    }();
    return p;
}

}  // namespace

TEST_CASE("check certifies the shipped bench config") {
    CmdResult res = run_cli("check " + q(bench_config()), "check_bench");
    CHECK(res.code == 0);
    json rep = json::parse(res.out);
    CHECK(rep["feasible"] == true);
    CHECK(rep["failureReason"].is_null());
    CHECK(rep["alpha"].get<double>() ==
          doctest::Approx(0.3590909090909091).epsilon(1e-12));
    CHECK(rep["worstMargin"].get<double>() ==
          doctest::Approx(2.6938510273729244).epsilon(1e-9));
    CHECK(rep["worstTime"].get<double>() == 60.0);
    CHECK(rep["units"] == "deg");
    CHECK(rep["toolVersion"] == "0.1.0");
    CHECK(rep["phiR"].get<std::string>().find("min(") != std::string::npos);
    CHECK(rep["marginSeries"] == "");  // nothing written without --out
}

TEST_CASE("check --out writes the margin series, report and manifest") {
    const fs::path out = scratch() / "check_art";
    CmdResult res = run_cli(
        "check " + q(bench_config()) + " --out " + q(out), "check_art");
    CHECK(res.code == 0);

    const std::string margins = read_file(out / "margins.csv");
    CHECK(first_line(margins) == "t,phi_tau,required,margin,margin_deg");
    CHECK(line_count(margins) == 6002);  // header + one row per grid point

    json rep = json::parse(read_file(out / "report.json"));
    CHECK(rep["feasible"] == true);
    CHECK(rep["marginSeries"] == "margins.csv");
    CHECK(json::parse(res.out)["worstMargin"] == rep["worstMargin"]);

    json manifest = json::parse(read_file(out / "manifest.json"));
    CHECK(manifest["configSha256"] ==
          tvblf::sha256_file(bench_config().string()));
    CHECK(manifest["toolVersion"] == "0.1.0");
    CHECK(manifest["command"].get<std::string>().find("check") !=
          std::string::npos);
    const auto outputs = manifest["outputs"].get<std::vector<std::string>>();
    CHECK(outputs == std::vector<std::string>{"margins.csv", "report.json"});
}

TEST_CASE("an uncertifiable config gets the infeasible exit code") {
    CmdResult res =
        run_cli("check " + q(starved_config()), "check_starved");
    CHECK(res.code == 3);
    json rep = json::parse(res.out);
    CHECK(rep["feasible"] == false);
    CHECK(rep["failureReason"] == "C1Violated");
    CHECK(rep["worstMargin"].get<double>() < 0.0);
}

TEST_CASE("simulate writes the full artifact set on a clean run") {
    const fs::path out = scratch() / "sim_short";
    CmdResult res = run_cli("simulate " + q(bench_config()) + " --out " +
                                q(out) + " --horizon 1",
                            "sim_short");
    CHECK(res.code == 0);

    const std::string traj = read_file(out / "trajectory.csv");
    CHECK(first_line(traj) ==
          "t,q1,q2,qd1,qd2,qdot1,qdot2,e_norm,edot_norm,r_norm,phi_e,"
          "phi_edot,phi_r,tau1,tau2,tau_norm,phi_tau,dtau_norm,thetaHat_norm,"
          "V_r,margin_e,margin_edot,margin_r,margin_tau");
    // Initial sample plus one per ten 1 ms steps over one second.
    CHECK(line_count(traj) == 102);

    json summary = json::parse(read_file(out / "summary.json"));
    CHECK(summary["aborted"] == false);
    CHECK(summary["steps"] == 1000);
    CHECK(summary["horizon"].get<double>() == 1.0);
    CHECK(summary["violations"]["e"] == 0);
    CHECK(summary["violations"]["edot"] == 0);
    CHECK(summary["violations"]["r"] == 0);
    CHECK(summary["violations"]["tau"] == 0);
    CHECK(summary["denClampCount"] == 0);

    json manifest = json::parse(read_file(out / "manifest.json"));
    CHECK(manifest["configSha256"] ==
          tvblf::sha256_file(bench_config().string()));
    CHECK(manifest["certificate"]["feasible"] == true);
    CHECK(manifest["certificate"]["forced"] == false);
    const auto outputs = manifest["outputs"].get<std::vector<std::string>>();
    CHECK(outputs ==
          std::vector<std::string>{"trajectory.csv", "summary.json"});
}

TEST_CASE("simulate refuses an uncertified config without --force") {
    const fs::path out = scratch() / "sim_refused";
    CmdResult res = run_cli(
        "simulate " + q(starved_config()) + " --out " + q(out), "sim_refused");
    CHECK(res.code == 2);
    CHECK(res.err.find("refusing") != std::string::npos);
    CHECK_FALSE(fs::exists(out / "trajectory.csv"));
}

TEST_CASE("--force runs the uncertified loop and reports its abort") {
    const fs::path out = scratch() / "sim_forced";
    CmdResult res =
        run_cli("simulate " + q(starved_config()) + " --out " + q(out) +
                    " --force",
                "sim_forced");
    CHECK(res.code == 2);
    json summary = json::parse(read_file(out / "summary.json"));
    CHECK(summary["aborted"] == true);
    CHECK(summary["abortTime"].get<double>() > 0.0);
    CHECK(fs::exists(out / "trajectory.csv"));
    json manifest = json::parse(read_file(out / "manifest.json"));
    CHECK(manifest["certificate"]["feasible"] == false);
    CHECK(manifest["certificate"]["forced"] == true);
}

TEST_CASE("envelope tabulates the profile and its convergence time") {
    CmdResult res = run_cli(
        "envelope --phi0 2 --phiInf 0.1 --kappa 1 --nu 1 --eps 0.2",
        "envelope_ok");
    CHECK(res.code == 0);
    json rep = json::parse(res.out);
    CHECK(rep["convergenceTime"].get<double>() ==
          doctest::Approx(18.0).epsilon(1e-12));
    REQUIRE(rep["table"].size() == 21);  // default 10 s end, 0.5 s step
    CHECK(rep["table"][0]["t"] == 0.0);
    CHECK(rep["table"][0]["value"].get<double>() == 2.0);
    CHECK(rep["table"][0]["derivative"].get<double>() ==
          doctest::Approx(-1.9).epsilon(1e-12));
    CHECK(rep["table"][20]["t"] == 10.0);

    // A level below the floor is never crossed.
    CmdResult bad = run_cli(
        "envelope --phi0 2 --phiInf 0.1 --kappa 1 --nu 1 --eps 0.05",
        "envelope_bad");
    CHECK(bad.code == 1);
    CHECK(bad.err.find("error:") != std::string::npos);
}

TEST_CASE("missing and malformed configs exit with the error code") {
    CmdResult missing = run_cli(
        "check " + q(scratch() / "no_such_config.json"), "check_missing");
    CHECK(missing.code == 1);
    CHECK(missing.err.find("error:") != std::string::npos);

    const fs::path mangled = scratch() / "mangled.json";
    std::ofstream(mangled) << "{ not json";
    CmdResult bad = run_cli("check " + q(mangled), "check_mangled");
    CHECK(bad.code == 1);
    CHECK(bad.err.find("error:") != std::string::npos);
}

TEST_CASE("batch simulate fans out into per-config directories") {
    const fs::path out = scratch() / "batch";
    CmdResult res = run_cli("simulate " + q(config_dir()) + " --out " +
                                q(out) + " --jobs 2",
                            "batch");
    CHECK(res.code == 0);
    for (const char* stem : {"helicopter_quanser", "helicopter_quanser_disturbed",
                             "helicopter_wide_tubes"}) {
        const fs::path dir = out / stem;
        CAPTURE(stem);
        CHECK(fs::exists(dir / "trajectory.csv"));
        CHECK(fs::exists(dir / "manifest.json"));
        json summary = json::parse(read_file(dir / "summary.json"));
        CHECK(summary["aborted"] == false);
    }
}
