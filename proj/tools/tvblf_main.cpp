#include <atomic>
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "tvblf/config.hpp"
#include "tvblf/envelope.hpp"
#include "tvblf/errors.hpp"
#include "tvblf/manifest.hpp"
#include "tvblf/sim.hpp"
#include "tvblf/version.hpp"

namespace fs = std::filesystem;
using namespace tvblf;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitViolations = 2;
constexpr int kExitInfeasible = 3;

// TVBLF_LOG: "quiet" suppresses progress, "debug" adds detail. Errors always
// go to stderr; mandated stdout payloads are unaffected.
int log_level() {
    const char* v = std::getenv("TVBLF_LOG");
    if (!v) return 1;
    std::string s(v);
    if (s == "quiet" || s == "0") return 0;
    if (s == "debug" || s == "2") return 2;
    return 1;
}

std::mutex g_logMutex;

void log_line(int level, const std::string& msg) {
    if (log_level() < level) return;
    std::lock_guard<std::mutex> lock(g_logMutex);
    std::fprintf(stderr, "%s\n", msg.c_str());
}

std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

std::string certificate_summary(const FeasibilityReport& rep) {
    if (rep.feasible)
        return "certificate: feasible (alpha = " + fmt("%.6g", rep.alphaSelected) +
               ", worst margin = " + fmt("%.6g", rep.worstMargin) + " at t = " +
               fmt("%.6g", rep.worstTime) + ")";
    std::string s = "certificate: infeasible (" + rep.failureReason + ")";
    if (!rep.detail.empty()) s += ": " + rep.detail;
    if (rep.failureReason == "C1Violated")
        s += " [worst margin = " + fmt("%.6g", rep.worstMargin) + " at t = " +
             fmt("%.6g", rep.worstTime) + "]";
    return s;
}

std::string violation_summary(const SummaryReport& s) {
    std::string out = "violations: e=" + std::to_string(s.violationsE) +
                      " edot=" + std::to_string(s.violationsEdot) +
                      " r=" + std::to_string(s.violationsR) +
                      " tau=" + std::to_string(s.violationsTau) +
                      "; anomalies=" + std::to_string(s.denClampCount);
    if (s.aborted)
        out += "; aborted at t = " + fmt("%.6g", s.abortTime) + " (" +
               s.abortReason + ")";
    return out;
}

struct SimulateOptions {
    std::string outDir;
    bool force = false;
    std::optional<double> dt;
    std::optional<double> horizon;
    std::string commandLine;
};

int simulate_one(const std::string& configPath, const SimulateOptions& opt) {
    const auto t0 = std::chrono::steady_clock::now();
    LoadedConfig lc = load_config(configPath);
    if (opt.dt) {
        if (!(*opt.dt > 0.0)) throw ConfigError("--dt must be positive");
        lc.sim.dt = *opt.dt;
    }
    if (opt.horizon) {
        if (!(*opt.horizon > 0.0))
            throw ConfigError("--horizon must be positive");
        lc.sim.horizon = *opt.horizon;
        lc.feasibility.grid = TimeGrid::over(*opt.horizon, lc.gridStep);
    }

    FeasibilityReport cert = resolve_loop(lc);
    log_line(1, configPath + ": " + certificate_summary(cert));
    if (!cert.feasible && !opt.force) {
        log_line(0, configPath +
                        ": refusing to simulate an uncertified config "
                        "(pass --force to override)");
        return kExitViolations;
    }
    if (!lc.sim.env.phiR)
        throw ConfigError(
            "no filtered-error envelope could be constructed (" +
            cert.failureReason + "); --force cannot help here");

    SimResult result = run(lc.sim);

    fs::create_directories(opt.outDir);
    const fs::path out(opt.outDir);
    write_trajectory_csv((out / "trajectory.csv").string(), result.log);
    write_summary_json((out / "summary.json").string(), result.summary);

    RunManifest manifest;
    manifest.configPath = configPath;
    manifest.configSha256 = sha256_file(configPath);
    manifest.toolVersion = kToolVersion;
    manifest.command = opt.commandLine;
    manifest.outputs = {"trajectory.csv", "summary.json"};
    manifest.hasCertificate = true;
    manifest.certificateFeasible = cert.feasible;
    manifest.certificateAlpha = cert.alphaSelected;
    manifest.certificateWorstMargin = cert.worstMargin;
    manifest.forced = opt.force;
    manifest.wallSeconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    write_manifest((out / "manifest.json").string(), manifest);

    const SummaryReport& s = result.summary;
    const bool clean = !s.aborted && s.violationsE == 0 &&
                       s.violationsEdot == 0 && s.violationsR == 0 &&
                       s.violationsTau == 0 && s.denClampCount == 0;
    log_line(1, configPath + ": " + std::to_string(s.steps) + " steps in " +
                    fmt("%.3g", s.wallSeconds) + " s; " +
                    violation_summary(s));
    return clean ? kExitOk : kExitViolations;
}

int cmd_simulate(const std::string& configPath, const SimulateOptions& opt,
                 int jobs) {
    if (!fs::is_directory(configPath)) return simulate_one(configPath, opt);

    // Batch mode: every *.json in the directory, each into its own
    // subdirectory of --out. Jobs are independent; the worst exit wins.
    std::vector<std::string> configs;
    for (const auto& entry : fs::directory_iterator(configPath))
        if (entry.is_regular_file() && entry.path().extension() == ".json")
            configs.push_back(entry.path().string());
    std::sort(configs.begin(), configs.end());
    if (configs.empty())
        throw ConfigError("no .json configs found in " + configPath);

    std::atomic<std::size_t> next{0};
    std::atomic<int> worst{kExitOk};
    auto worker = [&] {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= configs.size()) return;
            SimulateOptions jobOpt = opt;
            jobOpt.outDir =
                (fs::path(opt.outDir) / fs::path(configs[i]).stem()).string();
            int code;
            try {
                code = simulate_one(configs[i], jobOpt);
            } catch (const std::exception& e) {
                log_line(0, configs[i] + ": error: " + e.what());
                code = kExitError;
            }
            int cur = worst.load();
            while (cur < code && !worst.compare_exchange_weak(cur, code)) {
            }
        }
    };
    const int n = std::max(1, std::min<int>(jobs, configs.size()));
    std::vector<std::thread> pool;
    pool.reserve(n);
    for (int i = 0; i < n; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    log_line(1, "batch: " + std::to_string(configs.size()) +
                    " configs, worst exit " + std::to_string(worst.load()));
    return worst.load();
}

int cmd_check(const std::string& configPath, std::optional<double> gridStep,
              const std::string& outDir, const std::string& commandLine) {
    const auto t0 = std::chrono::steady_clock::now();
    LoadedConfig lc = load_config(configPath);
    if (gridStep) {
        if (!(*gridStep > 0.0))
            throw ConfigError("--grid-step must be positive");
        lc.gridStep = *gridStep;
        lc.feasibility.grid = TimeGrid::over(lc.sim.horizon, *gridStep);
    }

    FeasibilityReport rep = check_feasibility(lc.feasibility);
    log_line(2, configPath + ": " + certificate_summary(rep));

    std::string marginSeriesPath;
    if (!outDir.empty() && !rep.margins.empty()) marginSeriesPath = "margins.csv";
    std::fputs(feasibility_json(rep, marginSeriesPath, lc.units).c_str(),
               stdout);

    if (!outDir.empty()) {
        fs::create_directories(outDir);
        const fs::path out(outDir);
        std::vector<std::string> outputs;
        if (!rep.margins.empty()) {
            // When the config was authored in degrees, append the margin
            // series evaluated in degree units so both readings are on file.
            std::optional<FeasibilityReport> deg;
            if (lc.units == "deg")
                deg = check_feasibility_degrees(lc.feasibility);
            write_margin_csv((out / "margins.csv").string(), rep,
                             deg ? &*deg : nullptr);
            outputs.push_back("margins.csv");
        }
        std::ofstream reportFile(out / "report.json");
        if (!reportFile)
            throw ConfigError("cannot open " +
                              (out / "report.json").string() +
                              " for writing");
        reportFile << feasibility_json(rep, marginSeriesPath, lc.units);
        reportFile.close();
        outputs.push_back("report.json");

        RunManifest manifest;
        manifest.configPath = configPath;
        manifest.configSha256 = sha256_file(configPath);
        manifest.toolVersion = kToolVersion;
        manifest.command = commandLine;
        manifest.outputs = std::move(outputs);
        manifest.wallSeconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                          t0)
                .count();
        write_manifest((out / "manifest.json").string(), manifest);
    }
    return rep.feasible ? kExitOk : kExitInfeasible;
}

int cmd_envelope(double phi0, double phiInf, double kappa, double nu,
                 double eps, double tEnd, double step) {
    PpfEnvelope env(phi0, phiInf, kappa, nu);
    double tc = convergence_time(env, eps);
    nlohmann::json j;
    j["phi0"] = phi0;
    j["phiInf"] = phiInf;
    j["kappa"] = kappa;
    j["nu"] = nu;
    j["eps"] = eps;
    j["convergenceTime"] = tc;
    nlohmann::json table = nlohmann::json::array();
    TimeGrid grid = TimeGrid::over(tEnd, step);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        double t = grid.at(i);
        table.push_back({{"t", t},
                         {"value", env.value(t)},
                         {"derivative", env.derivative(t)}});
    }
    j["table"] = std::move(table);
    std::fputs((j.dump(2) + "\n").c_str(), stdout);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    std::string commandLine;
    for (int i = 0; i < argc; ++i) {
        if (i) commandLine += ' ';
        commandLine += argv[i];
    }

    CLI::App app{"Barrier-envelope adaptive controller toolkit"};
    app.require_subcommand(1);

    std::string configPath;
    SimulateOptions simOpt;
    simOpt.commandLine = commandLine;
    int jobs = 1;
    double dtOverride = 0.0, horizonOverride = 0.0;
    auto* sim = app.add_subcommand(
        "simulate", "Certify a config, run the closed loop, write artifacts");
    sim->add_option("config", configPath,
                    "Config file, or a directory of configs for batch mode")
        ->required();
    sim->add_option("--out", simOpt.outDir, "Output directory")->required();
    sim->add_flag("--force", simOpt.force,
                  "Run even when the certificate is infeasible");
    auto* dtOpt = sim->add_option("--dt", dtOverride, "Override time step");
    auto* horizonOpt =
        sim->add_option("--horizon", horizonOverride, "Override horizon");
    sim->add_option("--jobs", jobs, "Parallel workers in batch mode")
        ->check(CLI::PositiveNumber);

    std::string checkConfig, checkOut;
    double gridStep = 0.0;
    auto* check = app.add_subcommand(
        "check", "Run the offline feasibility certificate, print the report");
    check->add_option("config", checkConfig, "Config file")->required();
    auto* gridOpt =
        check->add_option("--grid-step", gridStep, "Override evaluation grid");
    check->add_option("--out", checkOut,
                      "Also write margins.csv, report.json and a manifest");

    double phi0 = 0.0, phiInf = 0.0, kappa = 0.0, nu = 0.0, eps = 0.0;
    double tEnd = 10.0, tableStep = 0.5;
    auto* envelope = app.add_subcommand(
        "envelope", "Tabulate a performance envelope and its convergence time");
    envelope->add_option("--phi0", phi0, "Initial bound")->required();
    envelope->add_option("--phiInf", phiInf, "Asymptotic bound")->required();
    envelope->add_option("--kappa", kappa, "Decay rate")->required();
    envelope->add_option("--nu", nu, "Decay exponent")->required();
    envelope->add_option("--eps", eps, "Level whose crossing time is wanted")
        ->required();
    envelope->add_option("--t-end", tEnd, "Table end time");
    envelope->add_option("--step", tableStep, "Table step");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) {
            if (dtOpt->count()) simOpt.dt = dtOverride;
            if (horizonOpt->count()) simOpt.horizon = horizonOverride;
            return cmd_simulate(configPath, simOpt, jobs);
        }
        if (check->parsed()) {
            std::optional<double> gs;
            if (gridOpt->count()) gs = gridStep;
            return cmd_check(checkConfig, gs, checkOut, commandLine);
        }
        if (envelope->parsed())
            return cmd_envelope(phi0, phiInf, kappa, nu, eps, tEnd, tableStep);
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitError;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitError;
    }
    return kExitError;
}
