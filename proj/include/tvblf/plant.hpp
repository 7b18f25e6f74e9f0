#pragma once

#include <cstdint>

#include <Eigen/Dense>

#include "tvblf/errors.hpp"

namespace tvblf {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Mat26 = Eigen::Matrix<double, 2, 6>;

// Two-rotor bench parameters: pitch axis q1, yaw axis q2. Plain aggregate;
// positivity is enforced at config ingestion, not here, so derived quantities
// can be evaluated for degenerate parameter sets in isolation.
struct HelicopterParams {
    double Jp = 0.0;   // pitch rotor inertia
    double Jy = 0.0;   // yaw rotor inertia
    double m = 0.0;    // moving mass
    double l = 0.0;    // mass offset from pitch axis
    double Bp = 0.0;   // pitch viscous friction
    double By = 0.0;   // yaw viscous friction
    double g = 9.81;

    // Voltage-to-torque map, row major: tau = [[Kpp, Kpy], [Kyp, Kyy]] * v.
    double Kpp = 0.0, Kpy = 0.0, Kyp = 0.0, Kyy = 0.0;

    double ml2() const { return m * l * l; }
    double mgl() const { return m * g * l; }

    // Bench values from the manufacturer's data sheet.
    static HelicopterParams quanser();
};

struct ElState {
    Vec2 q = Vec2::Zero();
    Vec2 qdot = Vec2::Zero();
};

// Constants bounding the model terms, used by the offline certificate:
//   km1*I <= M(q) <= km2*I, ||Vm(q, qdot)|| <= kv*||qdot||, ||G(q)|| <= kg,
//   ||F(qdot)|| <= kf1 + kf2*||qdot||, ||theta|| <= thetaBar, ||d|| <= dBar.
struct BoundConstants {
    double km1 = 0.0;
    double km2 = 0.0;
    double kv = 0.0;
    double kg = 0.0;
    double kf1 = 0.0;
    double kf2 = 0.0;
    double thetaBar = 0.0;
    double dBar = 0.0;
};

// Inertia matrix, diagonal: diag(Jp + m l^2, Jy + m l^2 cos^2 q1).
Mat2 mass_matrix(const HelicopterParams& p, const Vec2& q);

// Coriolis/centripetal matrix with c = (m l^2 / 2) sin(2 q1):
//   [[0, c*qdot2], [-c*qdot2, -c*qdot1]].
// This factorization makes d/dt M - 2 Vm skew-symmetric.
Mat2 coriolis_matrix(const HelicopterParams& p, const Vec2& q,
                     const Vec2& qdot);

// Gravity torque (m g l cos q1, 0).
Vec2 gravity(const HelicopterParams& p, const Vec2& q);

// Viscous friction diag(Bp, By) * qdot.
Vec2 friction(const HelicopterParams& p, const Vec2& qdot);

// Acceleration from M qddot = tau + d - Vm qdot - G - F. M is diagonal, so
// the solve is an exact componentwise divide.
Vec2 forward_dynamics(const HelicopterParams& p, const ElState& s,
                      const Vec2& tau, const Vec2& d);

// Parameter vector (Jp + m l^2, Jy, m l^2, m g l, Bp, By).
Vec6 theta_true(const HelicopterParams& p);

// Regressor of the filtered-error dynamics: with u = alphaEdot - qddotD and
// w = r - qdot,
//   Y(s, r, alphaEdot, qddotD) * theta_true = M u + Vm w - G - F
// for every parameter set. Parameter free by construction. alphaEdot is the
// already-scaled product alpha * edot.
Mat26 regressor(const ElState& s, const Vec2& r, const Vec2& alphaEdot,
                const Vec2& qddotD);

Vec2 torque_from_voltage(const HelicopterParams& p, const Vec2& v);

// Inverse of the voltage-to-torque map; throws SingularMap when the map is
// not invertible.
Vec2 voltage_from_torque(const HelicopterParams& p, const Vec2& tau);

// Published bounding constants for the bench model plus km1 = Jy (the least
// inertia eigenvalue over all attitudes).
BoundConstants default_bounds(const HelicopterParams& p);

struct BoundCheckReport {
    int samples = 0;
    int inertiaViolations = 0;
    int coriolisViolations = 0;
    int gravityViolations = 0;
    int frictionViolations = 0;
    // Worst signed slack per bound (negative means violated).
    double worstInertiaSlack = 0.0;
    double worstCoriolisSlack = 0.0;
    double worstGravitySlack = 0.0;
    double worstFrictionSlack = 0.0;

    bool clean() const {
        return inertiaViolations == 0 && coriolisViolations == 0 &&
               gravityViolations == 0 && frictionViolations == 0;
    }
};

// Monte Carlo spot check of BoundConstants against the model terms over
// q1 in [-pi, pi], qdot in [-5, 5]^2 and random unit directions.
BoundCheckReport verify_bounds(const HelicopterParams& p,
                               const BoundConstants& b, int samples,
                               std::uint64_t seed);

}  // namespace tvblf
