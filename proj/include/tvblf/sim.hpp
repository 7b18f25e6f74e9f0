#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tvblf/controller.hpp"
#include "tvblf/envelope.hpp"
#include "tvblf/plant.hpp"
#include "tvblf/reference.hpp"

namespace tvblf {

// Integration state: q (2), qdot (2), thetaHat (6).
using StateVec = Eigen::Matrix<double, 10, 1>;

struct SimConfig {
    HelicopterParams plant;
    BoundConstants bounds;   // km2 feeds the control law and the barrier
    ControllerGains gains;   // thetaBar/epsProj here govern the projection
    EnvelopeSet env;
    ReferenceSpec reference = ReferenceSpec::sinusoid(Vec2::Zero(),
                                                      Vec2::Zero(), 0.0);
    DisturbanceSpec disturbance;
    Vec6 thetaHat0 = Vec6::Zero();
    std::optional<ElState> x0;  // defaults to starting on the reference
    double dt = 1e-3;
    double horizon = 60.0;
    int logEvery = 10;        // record every logEvery-th step plus the last
    bool zohControl = false;  // hold control and adaptation over each step
    double noiseStd = 0.0;    // measurement noise on q and qdot, per axis
    std::uint64_t seed = 0;
    // Units the config was declared in ("rad" or "deg"); everything in this
    // struct is already converted to radians. Informational, used by reports.
    std::string units = "rad";
};

// One logged sample. All fields are evaluated on the true state (records
// certify the physical trajectory even when the controller acts on noisy
// measurements).
struct TrajectoryRecord {
    double t = 0.0;
    Vec2 q = Vec2::Zero();
    Vec2 qd = Vec2::Zero();
    Vec2 qdot = Vec2::Zero();
    double eNorm = 0.0, edotNorm = 0.0, rNorm = 0.0;
    double phiE = 0.0, phiEdot = 0.0, phiR = 0.0;
    Vec2 tau = Vec2::Zero();
    double tauNorm = 0.0, phiTau = 0.0, dtauNorm = 0.0;
    double thetaHatNorm = 0.0;
    double Vr = 0.0;  // barrier term of the Lyapunov function
    double marginE = 0.0, marginEdot = 0.0, marginR = 0.0, marginTau = 0.0;
    // Not serialized to CSV; used by analysis and tests.
    Vec6 thetaHat = Vec6::Zero();
    double V = 0.0;  // barrier term plus estimation-error term
};

struct Margins {
    double e = 0.0, edot = 0.0, r = 0.0, tau = 0.0;
    bool violE = false, violEdot = false, violR = false, violTau = false;
};

// Envelope margins at one sample. State margins must stay strictly positive;
// the input margin is allowed to touch zero (the limiter sits exactly on the
// bound while saturating), so only a genuine excess beyond round-off flags.
Margins monitor(const EnvelopeSet& env, double t, double eNorm,
                double edotNorm, double rNorm, double tauNorm);

struct SummaryReport {
    bool aborted = false;
    double abortTime = 0.0;
    std::string abortReason;
    long steps = 0;
    double dt = 0.0;
    double horizon = 0.0;
    int violationsE = 0, violationsEdot = 0, violationsR = 0,
        violationsTau = 0;
    double minMarginE = 0.0, minMarginEdot = 0.0, minMarginR = 0.0,
           minMarginTau = 0.0;
    double minMarginETime = 0.0, minMarginEdotTime = 0.0,
           minMarginRTime = 0.0, minMarginTauTime = 0.0;
    double terminalENorm = 0.0, terminalEdotNorm = 0.0, terminalRNorm = 0.0;
    double maxThetaHatNorm = 0.0;
    long denClampCount = 0;       // adaptation denominator floored (anomaly)
    double saturatedFraction = 0.0;  // fraction of control evaluations at the limiter
    double wallSeconds = 0.0;
};

struct SimResult {
    std::vector<TrajectoryRecord> log;
    SummaryReport summary;
};

// Closed-loop derivative at (t, x). Throws BarrierViolation when the filtered
// error has reached its envelope, which both aborts integration and protects
// the adaptation denominator.
StateVec closed_loop_rhs(const SimConfig& cfg, double t, const StateVec& x);

// One classic fourth-order Runge-Kutta step of length cfg.dt; the controller
// is evaluated inside every stage unless cfg.zohControl holds it.
StateVec integrate_step(const SimConfig& cfg, double t, const StateVec& x);

// Fixed-step closed-loop run. A barrier crossing is reported through
// summary.aborted with the partial trajectory preserved, not by throwing.
// Identical configs produce bit-identical results.
SimResult run(const SimConfig& cfg);

}  // namespace tvblf
