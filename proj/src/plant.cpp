#include "tvblf/plant.hpp"

#include <cmath>
#include <limits>
#include <random>

namespace tvblf {

HelicopterParams HelicopterParams::quanser() {
    HelicopterParams p;
    p.Jp = 0.0384;
    p.Jy = 0.0432;
    p.m = 1.38;
    p.l = 0.1857;
    p.Bp = 0.8;
    p.By = 0.318;
    p.g = 9.81;
    p.Kpp = 0.2041;
    p.Kpy = 0.0068;
    p.Kyp = 0.0219;
    p.Kyy = 0.0720;
    return p;
}

Mat2 mass_matrix(const HelicopterParams& p, const Vec2& q) {
    const double c1 = std::cos(q(0));
    Mat2 M = Mat2::Zero();
    M(0, 0) = p.Jp + p.ml2();
    M(1, 1) = p.Jy + p.ml2() * c1 * c1;
    return M;
}

Mat2 coriolis_matrix(const HelicopterParams& p, const Vec2& q,
                     const Vec2& qdot) {
    const double c = 0.5 * p.ml2() * std::sin(2.0 * q(0));
    Mat2 Vm;
    Vm << 0.0, c * qdot(1), -c * qdot(1), -c * qdot(0);
    return Vm;
}

Vec2 gravity(const HelicopterParams& p, const Vec2& q) {
    return {p.mgl() * std::cos(q(0)), 0.0};
}

Vec2 friction(const HelicopterParams& p, const Vec2& qdot) {
    return {p.Bp * qdot(0), p.By * qdot(1)};
}

Vec2 forward_dynamics(const HelicopterParams& p, const ElState& s,
                      const Vec2& tau, const Vec2& d) {
    const Mat2 M = mass_matrix(p, s.q);
    const Vec2 rhs = tau + d - coriolis_matrix(p, s.q, s.qdot) * s.qdot -
                     gravity(p, s.q) - friction(p, s.qdot);
    return {rhs(0) / M(0, 0), rhs(1) / M(1, 1)};
}

Vec6 theta_true(const HelicopterParams& p) {
    Vec6 th;
    th << p.Jp + p.ml2(), p.Jy, p.ml2(), p.mgl(), p.Bp, p.By;
    return th;
}

Mat26 regressor(const ElState& s, const Vec2& r, const Vec2& alphaEdot,
                const Vec2& qddotD) {
    const double c1 = std::cos(s.q(0));
    const double s2 = std::sin(2.0 * s.q(0));
    const Vec2 u = alphaEdot - qddotD;
    const Vec2 w = r - s.qdot;
    Mat26 Y = Mat26::Zero();
    Y(0, 0) = u(0);
    Y(0, 2) = 0.5 * s2 * s.qdot(1) * w(1);
    Y(0, 3) = -c1;
    Y(0, 4) = -s.qdot(0);
    Y(1, 1) = u(1);
    Y(1, 2) = c1 * c1 * u(1) - 0.5 * s2 * (s.qdot(1) * w(0) + s.qdot(0) * w(1));
    Y(1, 5) = -s.qdot(1);
    return Y;
}

Vec2 torque_from_voltage(const HelicopterParams& p, const Vec2& v) {
    return {p.Kpp * v(0) + p.Kpy * v(1), p.Kyp * v(0) + p.Kyy * v(1)};
}

Vec2 voltage_from_torque(const HelicopterParams& p, const Vec2& tau) {
    const double det = p.Kpp * p.Kyy - p.Kpy * p.Kyp;
    const double scale = std::abs(p.Kpp) + std::abs(p.Kpy) +
                         std::abs(p.Kyp) + std::abs(p.Kyy);
    if (std::abs(det) <= 1e-12 * scale * scale + 1e-300)
        throw SingularMap("voltage-to-torque map is not invertible");
    return {(p.Kyy * tau(0) - p.Kpy * tau(1)) / det,
            (-p.Kyp * tau(0) + p.Kpp * tau(1)) / det};
}

BoundConstants default_bounds(const HelicopterParams& p) {
    BoundConstants b;
    b.km1 = p.Jy;
    b.km2 = 0.0908;
    b.kv = 0.03365;
    b.kg = 2.514;
    b.kf1 = 0.0;
    b.kf2 = 0.8;
    b.thetaBar = 0.91;
    b.dBar = 0.5;
    return b;
}

BoundCheckReport verify_bounds(const HelicopterParams& p,
                               const BoundConstants& b, int samples,
                               std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> angle(-M_PI, M_PI);
    std::uniform_real_distribution<double> vel(-5.0, 5.0);

    BoundCheckReport rep;
    rep.samples = samples;
    rep.worstInertiaSlack = rep.worstCoriolisSlack = rep.worstGravitySlack =
        rep.worstFrictionSlack = std::numeric_limits<double>::infinity();

    const double tol = 1e-12;
    for (int i = 0; i < samples; ++i) {
        ElState s;
        s.q = {angle(rng), angle(rng)};
        s.qdot = {vel(rng), vel(rng)};
        const double phi = angle(rng);
        const Vec2 mu{std::cos(phi), std::sin(phi)};

        const Mat2 M = mass_matrix(p, s.q);
        const double quad = mu.dot(M * mu);
        const double slackM = std::min(quad - b.km1, b.km2 - quad);
        rep.worstInertiaSlack = std::min(rep.worstInertiaSlack, slackM);
        if (slackM < -tol) ++rep.inertiaViolations;

        const Mat2 Vm = coriolis_matrix(p, s.q, s.qdot);
        const double vmNorm =
            Eigen::JacobiSVD<Mat2>(Vm).singularValues()(0);
        const double slackV = b.kv * s.qdot.norm() - vmNorm;
        rep.worstCoriolisSlack = std::min(rep.worstCoriolisSlack, slackV);
        if (slackV < -tol) ++rep.coriolisViolations;

        const double slackG = b.kg - gravity(p, s.q).norm();
        rep.worstGravitySlack = std::min(rep.worstGravitySlack, slackG);
        if (slackG < -tol) ++rep.gravityViolations;

        const double slackF =
            b.kf1 + b.kf2 * s.qdot.norm() - friction(p, s.qdot).norm();
        rep.worstFrictionSlack = std::min(rep.worstFrictionSlack, slackF);
        if (slackF < -tol) ++rep.frictionViolations;
    }
    return rep;
}

}  // namespace tvblf
