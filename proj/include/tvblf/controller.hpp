#pragma once

#include "tvblf/plant.hpp"

namespace tvblf {

struct ControllerGains {
    double alpha = 0.0;      // filtered-error slope gain
    Mat2 K = Mat2::Zero();   // symmetric positive definite feedback gain
    Mat6 Gamma = Mat6::Zero();  // symmetric positive definite adaptation gain
    double thetaBar = 0.0;   // projection ball radius for the estimate
    double epsProj = 0.0;    // smoothing band width, 0 < epsProj < thetaBar
};

// Throws ConfigError unless alpha > 0, K and Gamma are symmetric positive
// definite, and 0 < epsProj < thetaBar.
void validate_gains(const ControllerGains& g);

// r = edot + alpha*e.
Vec2 filtered_error(const Vec2& e, const Vec2& edot, double alpha);

// Unsaturated law: tau_a = -Y*thetaHat - K*r + (phiRdot/phiR)*km2*r. The last
// term feeds the envelope's own contraction back so the barrier never
// tightens faster than the loop can follow.
Vec2 auxiliary_control(const Mat26& Y, const Vec6& thetaHat, const Mat2& K,
                       const Vec2& r, double phiR, double phiRdot, double km2);

// Norm limiter: tau = tau_a when ||tau_a|| <= phiTau, else scaled to the
// boundary. Direction is always preserved.
Vec2 saturate(const Vec2& tauA, double phiTau);

// delta_tau = tau - tau_a; by construction ||delta_tau|| =
// max(0, ||tau_a|| - phiTau).
Vec2 saturation_error(const Vec2& tau, const Vec2& tauA);

// Smooth ball projection: passes y through inside the ball of radius
// thetaBar - epsProj, removes the outward radial component progressively
// across the band, fully at ||thetaHat|| = thetaBar. Keeps any trajectory
// started inside the ball inside it.
Vec6 projection(const Vec6& thetaHat, const Vec6& y, double thetaBar,
                double epsProj);

// Regularization floor for the adaptation denominator.
double default_eps_den(double km2, double phiR0);

// Estimate dynamics
//   thetaHatDot = proj(thetaHat, Gamma*Y'*r / (km2*(phiR^2 - ||r||^2))).
// Throws BarrierViolation unless ||r|| < phiR. The denominator is floored at
// epsDen; *clamped (when non-null) reports whether the floor engaged on this
// call (callers log engagements as anomalies).
Vec6 adaptation_rhs(const Mat26& Y, const Vec2& r, const Mat6& Gamma,
                    double phiR, double km2, const Vec6& thetaHat,
                    double thetaBar, double epsProj, double epsDen,
                    bool* clamped = nullptr);

// Barrier term 0.5*log(p2 / (p2 - r'Mr)) with p2 = km2*phiR^2. Throws
// BarrierViolation unless r'Mr < p2; diverges as the weighted error
// approaches the barrier.
double blf_value(const Vec2& r, const Mat2& M, double phiR, double km2);

// blf_value plus the estimation-error term
// 0.5*thetaTilde'*Gamma^-1*thetaTilde. Diagnostic: thetaTilde needs the true
// parameters.
double lyapunov_value(const Vec2& r, const Mat2& M, double phiR, double km2,
                      const Vec6& thetaTilde, const Mat6& Gamma);

}  // namespace tvblf
