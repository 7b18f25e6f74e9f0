#include "tvblf/sim.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>

namespace tvblf {

namespace {

std::string fmt(const char* pattern, double a) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), pattern, a);
    return buf;
}

// Measurement offset on (q, qdot) as seen by the controller.
using Noise4 = Eigen::Matrix<double, 4, 1>;

struct RhsCounters {
    long denClamps = 0;
};

struct ControlEval {
    Vec2 e, edot, r, tauA, tau, dtau;
    Mat26 Y;
    double phiE, phiEdot, phiR, phiRdot, phiTau;
    bool saturated;
};

ControlEval evaluate_control(const SimConfig& cfg, double t,
                             const StateVec& x, const Noise4* noise) {
    ElState meas;
    meas.q = x.segment<2>(0);
    meas.qdot = x.segment<2>(2);
    if (noise) {
        meas.q += noise->segment<2>(0);
        meas.qdot += noise->segment<2>(2);
    }
    const ReferenceSample ref = cfg.reference.eval(t);

    ControlEval ev;
    ev.e = meas.q - ref.qd;
    ev.edot = meas.qdot - ref.qdotd;
    ev.r = filtered_error(ev.e, ev.edot, cfg.gains.alpha);
    ev.phiE = cfg.env.phiE->value(t);
    ev.phiEdot = cfg.env.phiEdot->value(t);
    ev.phiR = cfg.env.phiR->value(t);
    ev.phiRdot = cfg.env.phiR->derivative(t);
    ev.phiTau = cfg.env.phiTau->value(t);
    ev.Y = regressor(meas, ev.r, cfg.gains.alpha * ev.edot, ref.qddotd);
    ev.tauA = auxiliary_control(ev.Y, x.segment<6>(4), cfg.gains.K, ev.r,
                                ev.phiR, ev.phiRdot, cfg.bounds.km2);
    ev.tau = saturate(ev.tauA, ev.phiTau);
    ev.dtau = saturation_error(ev.tau, ev.tauA);
    ev.saturated = ev.tauA.norm() > ev.phiTau;
    return ev;
}

void check_barrier(const ControlEval& ev, double t) {
    if (!(ev.r.squaredNorm() < ev.phiR * ev.phiR))
        throw BarrierViolation(
            fmt("filtered error reached its envelope: ||r|| = %.6g", ev.r.norm()) +
                fmt(" >= phi_r = %.6g", ev.phiR) + fmt(" at t = %.6g", t),
            t);
}

StateVec rhs_impl(const SimConfig& cfg, double t, const StateVec& x,
                  const Noise4* noise, double epsDen, RhsCounters* counters) {
    const ControlEval ev = evaluate_control(cfg, t, x, noise);
    check_barrier(ev, t);

    ElState s;
    s.q = x.segment<2>(0);
    s.qdot = x.segment<2>(2);
    const Vec2 qddot =
        forward_dynamics(cfg.plant, s, ev.tau, cfg.disturbance.eval(t));

    bool clamped = false;
    const Vec6 thetaDot = adaptation_rhs(
        ev.Y, ev.r, cfg.gains.Gamma, ev.phiR, cfg.bounds.km2, x.segment<6>(4),
        cfg.gains.thetaBar, cfg.gains.epsProj, epsDen, &clamped);
    if (clamped && counters) ++counters->denClamps;

    StateVec dx;
    dx.segment<2>(0) = s.qdot;
    dx.segment<2>(2) = qddot;
    dx.segment<6>(4) = thetaDot;
    return dx;
}

StateVec step_impl(const SimConfig& cfg, double t, const StateVec& x,
                   const Noise4* noise, double epsDen, RhsCounters* counters) {
    const double dt = cfg.dt;
    StateVec k1, k2, k3, k4;
    if (cfg.zohControl) {
        // Control and adaptation computed once at the step start and held;
        // only the plant is advanced through the stages.
        const ControlEval ev = evaluate_control(cfg, t, x, noise);
        check_barrier(ev, t);
        bool clamped = false;
        const Vec6 thetaDot = adaptation_rhs(
            ev.Y, ev.r, cfg.gains.Gamma, ev.phiR, cfg.bounds.km2,
            x.segment<6>(4), cfg.gains.thetaBar, cfg.gains.epsProj, epsDen,
            &clamped);
        if (clamped && counters) ++counters->denClamps;
        const auto f = [&](double tt, const StateVec& xx) {
            ElState s;
            s.q = xx.segment<2>(0);
            s.qdot = xx.segment<2>(2);
            StateVec dx;
            dx.segment<2>(0) = s.qdot;
            dx.segment<2>(2) =
                forward_dynamics(cfg.plant, s, ev.tau, cfg.disturbance.eval(tt));
            dx.segment<6>(4) = thetaDot;
            return dx;
        };
        k1 = f(t, x);
        k2 = f(t + 0.5 * dt, x + 0.5 * dt * k1);
        k3 = f(t + 0.5 * dt, x + 0.5 * dt * k2);
        k4 = f(t + dt, x + dt * k3);
    } else {
        k1 = rhs_impl(cfg, t, x, noise, epsDen, counters);
        k2 = rhs_impl(cfg, t + 0.5 * dt, x + 0.5 * dt * k1, noise, epsDen,
                      counters);
        k3 = rhs_impl(cfg, t + 0.5 * dt, x + 0.5 * dt * k2, noise, epsDen,
                      counters);
        k4 = rhs_impl(cfg, t + dt, x + dt * k3, noise, epsDen, counters);
    }
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

long validated_step_count(const SimConfig& cfg) {
    if (!(cfg.dt > 0.0) || !(cfg.horizon > 0.0))
        throw ConfigError("simulation requires dt > 0 and horizon > 0");
    if (cfg.dt > 1e-2)
        throw ConfigError(
            fmt("dt %g", cfg.dt) +
            " exceeds the 1e-2 ceiling needed to resolve the loop dynamics");
    const auto n = static_cast<long>(std::llround(cfg.horizon / cfg.dt));
    if (n < 1 || std::abs(static_cast<double>(n) * cfg.dt - cfg.horizon) >
                     1e-9 * std::max(1.0, cfg.horizon))
        throw ConfigError(fmt("dt %g", cfg.dt) +
                          fmt(" does not divide horizon %g", cfg.horizon));
    return n;
}

void validate_sim_config(const SimConfig& cfg) {
    if (!cfg.env.phiE || !cfg.env.phiEdot || !cfg.env.phiR || !cfg.env.phiTau)
        throw ConfigError("simulation requires phi_e, phi_edot, phi_r, phi_tau");
    if (cfg.logEvery < 1) throw ConfigError("logEvery must be >= 1");
    if (!(cfg.noiseStd >= 0.0)) throw ConfigError("noiseStd must be >= 0");
    if (!(cfg.bounds.km2 > 0.0)) throw ConfigError("bound km2 must be positive");
    validate_gains(cfg.gains);
    if (cfg.disturbance.supNorm() > cfg.bounds.dBar + 1e-12)
        throw ConfigError(
            fmt("disturbance supremum %g", cfg.disturbance.supNorm()) +
            fmt(" exceeds the certified bound %g", cfg.bounds.dBar));
}

}  // namespace

Margins monitor(const EnvelopeSet& env, double t, double eNorm,
                double edotNorm, double rNorm, double tauNorm) {
    Margins m;
    m.e = env.phiE->value(t) - eNorm;
    m.edot = env.phiEdot->value(t) - edotNorm;
    m.r = env.phiR->value(t) - rNorm;
    m.tau = env.phiTau->value(t) - tauNorm;
    m.violE = !(m.e > 0.0);
    m.violEdot = !(m.edot > 0.0);
    m.violR = !(m.r > 0.0);
    m.violTau = m.tau < -1e-12;
    return m;
}

StateVec closed_loop_rhs(const SimConfig& cfg, double t, const StateVec& x) {
    const double epsDen =
        default_eps_den(cfg.bounds.km2, cfg.env.phiR->value(0.0));
    return rhs_impl(cfg, t, x, nullptr, epsDen, nullptr);
}

StateVec integrate_step(const SimConfig& cfg, double t, const StateVec& x) {
    const double epsDen =
        default_eps_den(cfg.bounds.km2, cfg.env.phiR->value(0.0));
    return step_impl(cfg, t, x, nullptr, epsDen, nullptr);
}

SimResult run(const SimConfig& cfg) {
    const auto wallStart = std::chrono::steady_clock::now();
    validate_sim_config(cfg);
    const long steps = validated_step_count(cfg);
    const double epsDen =
        default_eps_den(cfg.bounds.km2, cfg.env.phiR->value(0.0));

    StateVec x;
    if (cfg.x0) {
        x.segment<2>(0) = cfg.x0->q;
        x.segment<2>(2) = cfg.x0->qdot;
    } else {
        const ReferenceSample ref0 = cfg.reference.eval(0.0);
        x.segment<2>(0) = ref0.qd;
        x.segment<2>(2) = ref0.qdotd;
    }
    x.segment<6>(4) = cfg.thetaHat0;

    // Initial admissibility: the barrier argument needs the error inside its
    // envelope (strictly, for the filtered error) and the estimate inside the
    // projection ball before the first step.
    {
        const ReferenceSample ref0 = cfg.reference.eval(0.0);
        const Vec2 e0 = x.segment<2>(0) - ref0.qd;
        const Vec2 edot0 = x.segment<2>(2) - ref0.qdotd;
        const double phiE0 = cfg.env.phiE->value(0.0);
        const double phiR0 = cfg.env.phiR->value(0.0);
        if (e0.norm() > phiE0)
            throw ConfigError(
                fmt("initial-condition check failed: ||e(0)|| = %.6g", e0.norm()) +
                fmt(" > phi_e(0) = %.6g", phiE0));
        const double r0 = filtered_error(e0, edot0, cfg.gains.alpha).norm();
        if (!(r0 < phiR0))
            throw ConfigError(
                fmt("initial-condition check failed: ||r(0)|| = %.6g", r0) +
                fmt(" >= phi_r(0) = %.6g", phiR0));
        if (cfg.thetaHat0.norm() > cfg.gains.thetaBar)
            throw ConfigError(
                fmt("initial estimate norm %.6g", cfg.thetaHat0.norm()) +
                fmt(" lies outside the projection ball %.6g",
                    cfg.gains.thetaBar));
    }

    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    SimResult out;
    auto& sum = out.summary;
    sum.dt = cfg.dt;
    sum.horizon = cfg.horizon;
    sum.steps = steps;
    sum.minMarginE = sum.minMarginEdot = sum.minMarginR = sum.minMarginTau =
        std::numeric_limits<double>::infinity();
    sum.maxThetaHatNorm = cfg.thetaHat0.norm();
    out.log.reserve(static_cast<std::size_t>(steps / cfg.logEvery) + 2);

    const Vec6 thetaTrue = theta_true(cfg.plant);
    RhsCounters counters;

    const auto logPoint = [&](double t, const StateVec& xs) {
        // Records always reflect the true (noiseless) state; the monitor
        // certifies the physical trajectory, not the measured one.
        const ControlEval ev = evaluate_control(cfg, t, xs, nullptr);
        TrajectoryRecord rec;
        rec.t = t;
        rec.q = xs.segment<2>(0);
        rec.qd = cfg.reference.eval(t).qd;
        rec.qdot = xs.segment<2>(2);
        rec.eNorm = ev.e.norm();
        rec.edotNorm = ev.edot.norm();
        rec.rNorm = ev.r.norm();
        rec.phiE = ev.phiE;
        rec.phiEdot = ev.phiEdot;
        rec.phiR = ev.phiR;
        rec.tau = ev.tau;
        rec.tauNorm = ev.tau.norm();
        rec.phiTau = ev.phiTau;
        rec.dtauNorm = ev.dtau.norm();
        rec.thetaHat = xs.segment<6>(4);
        rec.thetaHatNorm = rec.thetaHat.norm();
        const Mat2 M = mass_matrix(cfg.plant, rec.q);
        const double p2 = cfg.bounds.km2 * ev.phiR * ev.phiR;
        if (ev.r.dot(M * ev.r) < p2) {
            rec.Vr = blf_value(ev.r, M, ev.phiR, cfg.bounds.km2);
            rec.V = lyapunov_value(ev.r, M, ev.phiR, cfg.bounds.km2,
                                   Vec6(rec.thetaHat - thetaTrue),
                                   cfg.gains.Gamma);
        } else {
            rec.Vr = rec.V = std::numeric_limits<double>::infinity();
        }
        const Margins m =
            monitor(cfg.env, t, rec.eNorm, rec.edotNorm, rec.rNorm, rec.tauNorm);
        rec.marginE = m.e;
        rec.marginEdot = m.edot;
        rec.marginR = m.r;
        rec.marginTau = m.tau;
        if (m.violE) ++sum.violationsE;
        if (m.violEdot) ++sum.violationsEdot;
        if (m.violR) ++sum.violationsR;
        if (m.violTau) ++sum.violationsTau;
        if (m.e < sum.minMarginE) {
            sum.minMarginE = m.e;
            sum.minMarginETime = t;
        }
        if (m.edot < sum.minMarginEdot) {
            sum.minMarginEdot = m.edot;
            sum.minMarginEdotTime = t;
        }
        if (m.r < sum.minMarginR) {
            sum.minMarginR = m.r;
            sum.minMarginRTime = t;
        }
        if (m.tau < sum.minMarginTau) {
            sum.minMarginTau = m.tau;
            sum.minMarginTauTime = t;
        }
        out.log.push_back(std::move(rec));
    };

    long saturatedSteps = 0;
    logPoint(0.0, x);
    for (long i = 0; i < steps; ++i) {
        const double t = static_cast<double>(i) * cfg.dt;
        Noise4 noise;
        const Noise4* noisePtr = nullptr;
        if (cfg.noiseStd > 0.0) {
            for (int k = 0; k < 4; ++k) noise(k) = cfg.noiseStd * gauss(rng);
            noisePtr = &noise;
        }
        // Duty cycle counts steps whose step-start control hit the limiter.
        if (evaluate_control(cfg, t, x, noisePtr).saturated) ++saturatedSteps;
        try {
            x = step_impl(cfg, t, x, noisePtr, epsDen, &counters);
        } catch (const BarrierViolation& ex) {
            sum.aborted = true;
            sum.abortTime = ex.time;
            sum.abortReason = ex.what();
            break;
        }
        sum.maxThetaHatNorm =
            std::max(sum.maxThetaHatNorm, x.segment<6>(4).norm());
        const long done = i + 1;
        if (done % cfg.logEvery == 0 || done == steps)
            logPoint(static_cast<double>(done) * cfg.dt, x);
    }

    if (!out.log.empty()) {
        sum.terminalENorm = out.log.back().eNorm;
        sum.terminalEdotNorm = out.log.back().edotNorm;
        sum.terminalRNorm = out.log.back().rNorm;
    }
    sum.denClampCount = counters.denClamps;
    sum.saturatedFraction = steps > 0 ? static_cast<double>(saturatedSteps) /
                                            static_cast<double>(steps)
                                      : 0.0;
    sum.wallSeconds = std::chrono::duration<double>(
                          std::chrono::steady_clock::now() - wallStart)
                          .count();
    return out;
}

}  // namespace tvblf
