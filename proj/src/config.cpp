#include "tvblf/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <numbers>
#include <sstream>
#include <utility>

#include <Eigen/Eigenvalues>

#include "json.hpp"

#include "tvblf/errors.hpp"
#include "tvblf/version.hpp"

namespace tvblf {
namespace {

using nlohmann::json;

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kRadToDeg = 180.0 / std::numbers::pi;

[[noreturn]] void fail(const std::string& where, const std::string& what) {
    throw ConfigError(where + ": " + what);
}

const json& field(const json& j, const std::string& where,
                  const std::string& key) {
    auto it = j.find(key);
    if (it == j.end()) fail(where, "missing required field \"" + key + "\"");
    return *it;
}

double number(const json& j, const std::string& where,
              const std::string& key) {
    const json& v = field(j, where, key);
    if (!v.is_number()) fail(where, "field \"" + key + "\" must be a number");
    return v.get<double>();
}

double number_or(const json& j, const std::string& where,
                 const std::string& key, double fallback) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return fallback;
    if (!it->is_number()) fail(where, "field \"" + key + "\" must be a number");
    return it->get<double>();
}

bool bool_or(const json& j, const std::string& where, const std::string& key,
             bool fallback) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return fallback;
    if (!it->is_boolean())
        fail(where, "field \"" + key + "\" must be a boolean");
    return it->get<bool>();
}

Vec2 vec2(const json& v, const std::string& where) {
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() ||
        !v[1].is_number())
        fail(where, "expected an array of 2 numbers");
    return {v[0].get<double>(), v[1].get<double>()};
}

Vec6 vec6(const json& v, const std::string& where) {
    if (!v.is_array() || v.size() != 6)
        fail(where, "expected an array of 6 numbers");
    Vec6 out;
    for (int i = 0; i < 6; ++i) {
        if (!v[i].is_number()) fail(where, "expected an array of 6 numbers");
        out(i) = v[i].get<double>();
    }
    return out;
}

Mat2 mat2(const json& v, const std::string& where) {
    if (!v.is_array() || v.size() != 2)
        fail(where, "expected a 2x2 array of numbers");
    Mat2 out;
    for (int i = 0; i < 2; ++i) {
        Vec2 row = vec2(v[i], where);
        out(i, 0) = row(0);
        out(i, 1) = row(1);
    }
    return out;
}

void require_spd(const Eigen::MatrixXd& A, const std::string& where) {
    if ((A - A.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + A.norm()))
        fail(where, "matrix must be symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
    if (es.eigenvalues().minCoeff() <= 0.0)
        fail(where, "matrix must be positive definite");
}

EnvelopePtr parse_envelope(const json& j, const std::string& where,
                           double unitScale) {
    if (!j.is_object()) fail(where, "expected an envelope object");
    std::string kind = field(j, where, "kind").get<std::string>();
    try {
        if (kind == "ppf") {
            double phi0 = number(j, where, "phi0");
            double phiInf = number(j, where, "phiInf");
            double kappa = number(j, where, "kappa");
            double nu = number(j, where, "nu");
            return std::make_shared<PpfEnvelope>(phi0 * unitScale,
                                                 phiInf * unitScale, kappa, nu);
        }
        if (kind == "const") {
            double value = number(j, where, "value");
            return std::make_shared<ConstantEnvelope>(value * unitScale);
        }
    } catch (const DomainError& e) {
        throw DomainError(where + ": " + e.what());
    }
    fail(where, "unknown envelope kind \"" + kind +
                    "\" (expected \"ppf\" or \"const\")");
}

HelicopterParams parse_plant(const json& root) {
    HelicopterParams p = HelicopterParams::quanser();
    if (auto it = root.find("plant"); it != root.end()) {
        const json& j = *it;
        if (!j.is_object()) fail("plant", "expected an object");
        p.Jp = number_or(j, "plant", "Jp", p.Jp);
        p.Jy = number_or(j, "plant", "Jy", p.Jy);
        p.m = number_or(j, "plant", "m", p.m);
        p.l = number_or(j, "plant", "l", p.l);
        p.Bp = number_or(j, "plant", "Bp", p.Bp);
        p.By = number_or(j, "plant", "By", p.By);
        p.g = number_or(j, "plant", "g", p.g);
        p.Kpp = number_or(j, "plant", "Kpp", p.Kpp);
        p.Kpy = number_or(j, "plant", "Kpy", p.Kpy);
        p.Kyp = number_or(j, "plant", "Kyp", p.Kyp);
        p.Kyy = number_or(j, "plant", "Kyy", p.Kyy);
    }
    if (!(p.Jp > 0.0) || !(p.Jy > 0.0) || !(p.m > 0.0) || !(p.l > 0.0) ||
        !(p.g > 0.0))
        throw DomainError("plant: Jp, Jy, m, l and g must be positive");
    if (p.Bp < 0.0 || p.By < 0.0)
        throw DomainError("plant: friction coefficients must be nonnegative");
    double scale = std::abs(p.Kpp) + std::abs(p.Kpy) + std::abs(p.Kyp) +
                   std::abs(p.Kyy);
    if (std::abs(p.Kpp * p.Kyy - p.Kpy * p.Kyp) <=
        1e-12 * scale * scale + 1e-300)
        throw DomainError("plant: voltage-to-torque map is singular");
    return p;
}

BoundConstants parse_bounds(const json& root, const HelicopterParams& p) {
    BoundConstants b = default_bounds(p);
    if (auto it = root.find("bounds"); it != root.end()) {
        const json& j = *it;
        if (!j.is_object()) fail("bounds", "expected an object");
        b.km1 = number_or(j, "bounds", "km1", b.km1);
        b.km2 = number_or(j, "bounds", "km2", b.km2);
        b.kv = number_or(j, "bounds", "kv", b.kv);
        b.kg = number_or(j, "bounds", "kg", b.kg);
        b.kf1 = number_or(j, "bounds", "kf1", b.kf1);
        b.kf2 = number_or(j, "bounds", "kf2", b.kf2);
        b.thetaBar = number_or(j, "bounds", "thetaBar", b.thetaBar);
        b.dBar = number_or(j, "bounds", "dBar", b.dBar);
    }
    if (!(b.km1 > 0.0) || !(b.km2 >= b.km1))
        throw DomainError("bounds: need 0 < km1 <= km2");
    if (b.kv < 0.0 || b.kg < 0.0 || b.kf1 < 0.0 || b.kf2 < 0.0 || b.dBar < 0.0)
        throw DomainError("bounds: kv, kg, kf1, kf2, dBar must be nonnegative");
    if (!(b.thetaBar > 0.0))
        throw DomainError("bounds: thetaBar must be positive");
    return b;
}

ReferenceSpec parse_reference(const json& root, double unitScale) {
    auto it = root.find("reference");
    if (it == root.end()) fail("reference", "section is required");
    const json& j = *it;
    if (!j.is_object()) fail("reference", "expected an object");
    std::string kind = field(j, "reference", "kind").get<std::string>();
    if (kind == "sinusoid") {
        Vec2 offset =
            vec2(field(j, "reference", "offset"), "reference.offset") *
            unitScale;
        Vec2 amplitude =
            vec2(field(j, "reference", "amplitude"), "reference.amplitude") *
            unitScale;
        double omega = number(j, "reference", "omega");
        return ReferenceSpec::sinusoid(offset, amplitude, omega);
    }
    if (kind == "table") {
        const json& jt = field(j, "reference", "t");
        const json& jq = field(j, "reference", "qd");
        const json& jv = field(j, "reference", "qdot_d");
        const json& ja = field(j, "reference", "qddot_d");
        if (!jt.is_array() || !jq.is_array() || !jv.is_array() ||
            !ja.is_array() || jq.size() != jt.size() ||
            jv.size() != jt.size() || ja.size() != jt.size())
            fail("reference", "table arrays must have matching lengths");
        std::vector<double> ts;
        std::vector<Vec2> qd, qdotd, qddotd;
        for (std::size_t i = 0; i < jt.size(); ++i) {
            if (!jt[i].is_number())
                fail("reference.t", "expected an array of numbers");
            ts.push_back(jt[i].get<double>());
            qd.push_back(vec2(jq[i], "reference.qd") * unitScale);
            qdotd.push_back(vec2(jv[i], "reference.qdot_d") * unitScale);
            qddotd.push_back(vec2(ja[i], "reference.qddot_d") * unitScale);
        }
        return ReferenceSpec::table(std::move(ts), std::move(qd),
                                    std::move(qdotd), std::move(qddotd));
    }
    fail("reference", "unknown kind \"" + kind +
                          "\" (expected \"sinusoid\" or \"table\")");
}

DisturbanceSpec parse_disturbance(const json& root) {
    auto it = root.find("disturbance");
    if (it == root.end()) return DisturbanceSpec::none();
    const json& j = *it;
    if (j.is_null()) return DisturbanceSpec::none();
    if (!j.is_object()) fail("disturbance", "expected an object");
    std::string kind = field(j, "disturbance", "kind").get<std::string>();
    if (kind == "none") return DisturbanceSpec::none();
    if (kind == "sinusoid") {
        Vec2 amp = vec2(field(j, "disturbance", "amplitude"),
                        "disturbance.amplitude");
        double omega = number(j, "disturbance", "omega");
        return DisturbanceSpec::sinusoid(amp, omega);
    }
    if (kind == "constant") {
        Vec2 amp = vec2(field(j, "disturbance", "amplitude"),
                        "disturbance.amplitude");
        return DisturbanceSpec::constant(amp);
    }
    fail("disturbance", "unknown kind \"" + kind +
                            "\" (expected \"none\", \"sinusoid\" or "
                            "\"constant\")");
}

}  // namespace

LoadedConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    json root;
    try {
        root = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path + ": " + e.what());
    }
    if (!root.is_object()) throw ConfigError(path + ": top level must be an object");

    LoadedConfig lc;
    lc.path = path;

    // Units govern only angle-valued quantities; torques, gains and
    // parameter-space fields are unit-independent in this schema.
    const json simSection = root.value("sim", json::object());
    if (!simSection.is_object()) fail("sim", "expected an object");
    lc.units = simSection.value("units", std::string("deg"));
    if (lc.units != "deg" && lc.units != "rad")
        fail("sim.units", "expected \"deg\" or \"rad\"");
    const double unitScale = lc.units == "deg" ? kDegToRad : 1.0;

    SimConfig& sim = lc.sim;
    sim.units = lc.units;
    sim.plant = parse_plant(root);
    sim.bounds = parse_bounds(root, sim.plant);

    // Controller gains. alpha stays optional; the certificate resolves it.
    const json& ctrl = field(root, "config", "controller");
    if (!ctrl.is_object()) fail("controller", "expected an object");
    if (auto it = ctrl.find("alpha"); it != ctrl.end() && !it->is_null()) {
        double a = number(ctrl, "controller", "alpha");
        if (!(a > 0.0)) fail("controller.alpha", "must be positive");
        lc.alphaExplicit = a;
    }
    sim.gains.K = mat2(field(ctrl, "controller", "K"), "controller.K");
    require_spd(sim.gains.K, "controller.K");
    if (auto it = ctrl.find("Gamma"); it != ctrl.end() && !it->is_null()) {
        if (!it->is_array() || it->size() != 6)
            fail("controller.Gamma", "expected a 6x6 array of numbers");
        Mat6 G;
        for (int r = 0; r < 6; ++r) {
            Vec6 row = vec6((*it)[r], "controller.Gamma");
            G.row(r) = row.transpose();
        }
        sim.gains.Gamma = G;
    } else {
        double s = number_or(ctrl, "controller", "Gamma_scale", 1.0);
        if (!(s > 0.0)) fail("controller.Gamma_scale", "must be positive");
        sim.gains.Gamma = s * Mat6::Identity();
    }
    require_spd(sim.gains.Gamma, "controller.Gamma");
    sim.gains.thetaBar =
        number_or(ctrl, "controller", "thetaBar", sim.bounds.thetaBar);
    if (!(sim.gains.thetaBar > 0.0))
        fail("controller.thetaBar", "must be positive");
    sim.gains.epsProj = number_or(ctrl, "controller", "epsProj",
                                  0.05 * sim.gains.thetaBar);
    if (!(sim.gains.epsProj > 0.0 && sim.gains.epsProj < sim.gains.thetaBar))
        fail("controller.epsProj", "need 0 < epsProj < thetaBar");
    if (auto it = ctrl.find("thetaHat0"); it != ctrl.end() && !it->is_null())
        sim.thetaHat0 = vec6(*it, "controller.thetaHat0");
    if (sim.thetaHat0.norm() > sim.gains.thetaBar)
        fail("controller.thetaHat0",
             "initial estimate lies outside the projection ball");

    // Reference and disturbance.
    sim.reference = parse_reference(root, unitScale);
    sim.disturbance = parse_disturbance(root);

    // Simulation scalars.
    sim.dt = number_or(simSection, "sim", "dt", 1e-3);
    if (!(sim.dt > 0.0)) fail("sim.dt", "must be positive");
    sim.horizon = number_or(simSection, "sim", "T", 60.0);
    if (!(sim.horizon > 0.0)) fail("sim.T", "must be positive");
    double logEvery = number_or(simSection, "sim", "log_every", 10.0);
    if (!(logEvery >= 1.0) || logEvery != std::floor(logEvery))
        fail("sim.log_every", "must be a positive integer");
    sim.logEvery = static_cast<int>(logEvery);
    double seed = number_or(simSection, "sim", "seed", 0.0);
    if (seed < 0.0 || seed != std::floor(seed))
        fail("sim.seed", "must be a nonnegative integer");
    sim.seed = static_cast<std::uint64_t>(seed);
    sim.zohControl = bool_or(simSection, "sim", "zoh", false);
    sim.noiseStd = number_or(simSection, "sim", "noise_std", 0.0) * unitScale;
    if (sim.noiseStd < 0.0) fail("sim.noise_std", "must be nonnegative");
    if (auto it = simSection.find("x0"); it != simSection.end() &&
                                         !it->is_null()) {
        if (!it->is_object()) fail("sim.x0", "expected an object");
        ElState x0;
        x0.q = vec2(field(*it, "sim.x0", "q"), "sim.x0.q") * unitScale;
        x0.qdot =
            vec2(field(*it, "sim.x0", "qdot"), "sim.x0.qdot") * unitScale;
        sim.x0 = x0;
    }

    // Envelopes and the evaluation grid.
    const json& envs = field(root, "config", "envelopes");
    if (!envs.is_object()) fail("envelopes", "expected an object");
    lc.gridStep = number_or(envs, "envelopes", "grid_step", 0.01);
    if (!(lc.gridStep > 0.0)) fail("envelopes.grid_step", "must be positive");
    TimeGrid grid = TimeGrid::over(sim.horizon, lc.gridStep);

    EnvelopeSet& env = sim.env;
    env.phiQd = sim.reference.positionBound();
    env.phiQdotd = sim.reference.velocityBound();
    env.phiQddotd = sim.reference.accelerationBound();
    env.phiTau = parse_envelope(field(envs, "envelopes", "phi_tau"),
                                "envelopes.phi_tau", 1.0);

    const bool haveError = envs.contains("phi_e") || envs.contains("phi_edot");
    const bool haveState = envs.contains("phi_q") || envs.contains("phi_qdot");
    if (haveError == haveState)
        fail("envelopes",
             "specify exactly one pair: {phi_e, phi_edot} or {phi_q, phi_qdot}");
    if (haveError) {
        env.phiE = parse_envelope(field(envs, "envelopes", "phi_e"),
                                  "envelopes.phi_e", unitScale);
        env.phiEdot = parse_envelope(field(envs, "envelopes", "phi_edot"),
                                     "envelopes.phi_edot", unitScale);
        env.phiQ = std::make_shared<SumEnvelope>(env.phiE, env.phiQd);
        env.phiQdot = std::make_shared<SumEnvelope>(env.phiEdot, env.phiQdotd);
    } else {
        env.phiQ = parse_envelope(field(envs, "envelopes", "phi_q"),
                                  "envelopes.phi_q", unitScale);
        env.phiQdot = parse_envelope(field(envs, "envelopes", "phi_qdot"),
                                     "envelopes.phi_qdot", unitScale);
        auto pair = error_envelopes(env.phiQ, env.phiQdot, env.phiQd,
                                    env.phiQdotd, grid);
        env.phiE = pair.first;
        env.phiEdot = pair.second;
    }

    FeasibilityInputs& feas = lc.feasibility;
    feas.bounds = sim.bounds;
    feas.phiE = env.phiE;
    feas.phiEdot = env.phiEdot;
    feas.phiTau = env.phiTau;
    feas.phiQdotd = env.phiQdotd;
    feas.phiQddotd = env.phiQddotd;
    feas.K = sim.gains.K;
    feas.grid = grid;
    feas.eps1 = number_or(envs, "envelopes", "eps1", 0.05);
    if (!(feas.eps1 > 0.0)) fail("envelopes.eps1", "must be positive");
    if (auto it = envs.find("eps2"); it != envs.end() && !it->is_null()) {
        double e2 = number(envs, "envelopes", "eps2");
        if (e2 < 0.0) fail("envelopes.eps2", "must be nonnegative");
        feas.eps2 = e2;
    }
    feas.alpha = lc.alphaExplicit;
    feas.disturbed = sim.disturbance.supNorm() > 0.0;

    return lc;
}

FeasibilityReport resolve_loop(LoadedConfig& lc) {
    FeasibilityReport rep = check_feasibility(lc.feasibility);
    if (rep.alphaSelected > 0.0 && rep.phiR) {
        lc.sim.gains.alpha = rep.alphaSelected;
        lc.sim.env.alpha = rep.alphaSelected;
        lc.sim.env.phiR = rep.phiR;
    }
    return rep;
}

FeasibilityReport check_feasibility_degrees(const FeasibilityInputs& inputs) {
    FeasibilityInputs scaled = inputs;
    scaled.phiE = std::make_shared<ScaledEnvelope>(inputs.phiE, kRadToDeg);
    scaled.phiEdot =
        std::make_shared<ScaledEnvelope>(inputs.phiEdot, kRadToDeg);
    scaled.phiQdotd =
        std::make_shared<ScaledEnvelope>(inputs.phiQdotd, kRadToDeg);
    scaled.phiQddotd =
        std::make_shared<ScaledEnvelope>(inputs.phiQddotd, kRadToDeg);
    return check_feasibility(scaled);
}

void write_trajectory_csv(const std::string& path,
                          const std::vector<TrajectoryRecord>& log) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw ConfigError("cannot open " + path + " for writing");
    std::fputs(
        "t,q1,q2,qd1,qd2,qdot1,qdot2,e_norm,edot_norm,r_norm,phi_e,phi_edot,"
        "phi_r,tau1,tau2,tau_norm,phi_tau,dtau_norm,thetaHat_norm,V_r,"
        "margin_e,margin_edot,margin_r,margin_tau\n",
        f);
    for (const TrajectoryRecord& r : log) {
        std::fprintf(f,
                     "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,"
                     "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,"
                     "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                     r.t, r.q(0), r.q(1), r.qd(0), r.qd(1), r.qdot(0),
                     r.qdot(1), r.eNorm, r.edotNorm, r.rNorm, r.phiE,
                     r.phiEdot, r.phiR, r.tau(0), r.tau(1), r.tauNorm,
                     r.phiTau, r.dtauNorm, r.thetaHatNorm, r.Vr, r.marginE,
                     r.marginEdot, r.marginR, r.marginTau);
    }
    std::fclose(f);
}

void write_summary_json(const std::string& path, const SummaryReport& s) {
    json j;
    j["aborted"] = s.aborted;
    j["abortTime"] = s.abortTime;
    j["abortReason"] = s.abortReason;
    j["steps"] = s.steps;
    j["dt"] = s.dt;
    j["horizon"] = s.horizon;
    j["violations"] = {{"e", s.violationsE},
                       {"edot", s.violationsEdot},
                       {"r", s.violationsR},
                       {"tau", s.violationsTau}};
    j["minMargins"] = {
        {"e", {{"value", s.minMarginE}, {"t", s.minMarginETime}}},
        {"edot", {{"value", s.minMarginEdot}, {"t", s.minMarginEdotTime}}},
        {"r", {{"value", s.minMarginR}, {"t", s.minMarginRTime}}},
        {"tau", {{"value", s.minMarginTau}, {"t", s.minMarginTauTime}}}};
    j["terminal"] = {{"e_norm", s.terminalENorm},
                     {"edot_norm", s.terminalEdotNorm},
                     {"r_norm", s.terminalRNorm}};
    j["maxThetaHatNorm"] = s.maxThetaHatNorm;
    j["denClampCount"] = s.denClampCount;
    j["saturatedFraction"] = s.saturatedFraction;
    j["wallSeconds"] = s.wallSeconds;
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open " + path + " for writing");
    out << j.dump(2) << "\n";
}

void write_margin_csv(const std::string& path,
                      const FeasibilityReport& report,
                      const FeasibilityReport* degrees) {
    if (degrees && degrees->margins.size() != report.margins.size())
        throw ConfigError("margin series size mismatch between unit systems");
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw ConfigError("cannot open " + path + " for writing");
    std::fputs("t,phi_tau,required,margin", f);
    if (degrees) std::fputs(",margin_deg", f);
    std::fputs("\n", f);
    for (std::size_t i = 0; i < report.margins.size(); ++i) {
        const MarginSample& m = report.margins[i];
        std::fprintf(f, "%.17g,%.17g,%.17g,%.17g", m.t, m.phiTau, m.required,
                     m.margin);
        if (degrees) std::fprintf(f, ",%.17g", degrees->margins[i].margin);
        std::fputs("\n", f);
    }
    std::fclose(f);
}

std::string feasibility_json(const FeasibilityReport& report,
                             const std::string& marginSeriesPath,
                             const std::string& units) {
    json j;
    j["feasible"] = report.feasible;
    j["alpha"] = report.alphaSelected;
    j["eps2"] = report.eps2;
    j["worstMargin"] = report.worstMargin;
    j["worstTime"] = report.worstTime;
    j["gridStep"] = report.gridStep;
    j["disturbed"] = report.disturbed;
    j["phiR"] = report.phiRDescriptor;
    if (report.failureReason.empty())
        j["failureReason"] = nullptr;
    else
        j["failureReason"] = report.failureReason;
    j["detail"] = report.detail;
    j["marginSeries"] = marginSeriesPath;
    j["units"] = units;
    j["toolVersion"] = kToolVersion;
    return j.dump(2) + "\n";
}

}  // namespace tvblf
