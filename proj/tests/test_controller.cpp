#include "tvblf/controller.hpp"

#include <cmath>
#include <random>

#include "doctest.h"

#include "tvblf/errors.hpp"

using namespace tvblf;

namespace {

Vec6 random_vec6(std::mt19937_64& rng, double scale) {
    std::uniform_real_distribution<double> u(-scale, scale);
    Vec6 v;
    for (int i = 0; i < 6; ++i) v(i) = u(rng);
    return v;
}

}  // namespace

TEST_CASE("filtered error combines rate and scaled error") {
    CHECK(filtered_error(Vec2::Zero(), Vec2::Zero(), 0.7).norm() == 0.0);
    Vec2 r = filtered_error({1.0, 0.0}, {0.0, 1.0}, 0.5);
    CHECK(r(0) == 0.5);
    CHECK(r(1) == 1.0);
    // Algebraic inverse recovers the rate exactly.
    Vec2 e(0.3, -0.2), edot(-1.1, 0.4);
    Vec2 rr = filtered_error(e, edot, 1.7);
    CHECK(((rr - 1.7 * e) - edot).norm() == 0.0);
}

TEST_CASE("gain validation rejects degenerate matrices") {
    ControllerGains g;
    g.alpha = 0.5;
    g.K = Vec2(1.5, 0.2).asDiagonal();
    g.Gamma = 2.0 * Mat6::Identity();
    g.thetaBar = 3.0;
    g.epsProj = 0.15;
    CHECK_NOTHROW(validate_gains(g));

    ControllerGains bad = g;
    bad.alpha = 0.0;
    CHECK_THROWS_AS(validate_gains(bad), ConfigError);
    bad = g;
    bad.K(0, 1) = 0.5;  // asymmetric
    CHECK_THROWS_AS(validate_gains(bad), ConfigError);
    bad = g;
    bad.K = -Mat2::Identity();
    CHECK_THROWS_AS(validate_gains(bad), ConfigError);
    bad = g;
    bad.epsProj = 4.0;
    CHECK_THROWS_AS(validate_gains(bad), ConfigError);
    bad = g;
    bad.epsProj = 0.0;
    CHECK_THROWS_AS(validate_gains(bad), ConfigError);
}

TEST_CASE("auxiliary control assembles its three terms") {
    Mat26 Y = Mat26::Zero();
    Mat2 K = Vec2(1.5, 0.2).asDiagonal();
    Vec6 thetaHat = Vec6::Zero();

    // r = 0 leaves only the estimate feedforward.
    Y(0, 3) = -1.0;
    thetaHat(3) = 2.5;
    Vec2 tauA =
        auxiliary_control(Y, thetaHat, K, Vec2::Zero(), 0.5, -0.1, 0.0908);
    CHECK(tauA(0) == 2.5);
    CHECK(tauA(1) == 0.0);

    // Static envelope and no estimate: pure feedback.
    tauA = auxiliary_control(Mat26::Zero(), Vec6::Zero(), K, {1.0, 1.0}, 0.5,
                             0.0, 0.0908);
    CHECK(tauA(0) == -1.5);
    CHECK(tauA(1) == -0.2);

    // Shrinking envelope: the barrier term pulls inward along r.
    tauA = auxiliary_control(Mat26::Zero(), Vec6::Zero(), K, {1.0, 1.0}, 1.0,
                             -0.1, 0.0908);
    CHECK(tauA(0) == doctest::Approx(-1.50908).epsilon(1e-12));
    CHECK(tauA(1) == doctest::Approx(-0.20908).epsilon(1e-12));
}

TEST_CASE("saturation caps the norm and keeps the direction") {
    Vec2 onBoundary = saturate({3.0, 4.0}, 5.0);
    CHECK(onBoundary(0) == 3.0);
    CHECK(onBoundary(1) == 4.0);

    Vec2 clamped = saturate({6.0, 8.0}, 5.0);
    CHECK(clamped(0) == doctest::Approx(3.0).epsilon(1e-15));
    CHECK(clamped(1) == doctest::Approx(4.0).epsilon(1e-15));

    CHECK(saturate(Vec2::Zero(), 0.1).norm() == 0.0);
    CHECK_THROWS_AS(saturate({1.0, 0.0}, 0.0), DomainError);

    Vec2 dtau = saturation_error(clamped, {6.0, 8.0});
    CHECK(dtau(0) == doctest::Approx(-3.0).epsilon(1e-15));
    CHECK(dtau(1) == doctest::Approx(-4.0).epsilon(1e-15));
    CHECK(dtau.norm() == doctest::Approx(5.0).epsilon(1e-15));
}

TEST_CASE("saturation error norm is exactly the excess, 1000 draws") {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> u(-10.0, 10.0), up(0.05, 8.0);
    for (int i = 0; i < 1000; ++i) {
        Vec2 tauA(u(rng), u(rng));
        double phiTau = up(rng);
        Vec2 tau = saturate(tauA, phiTau);
        CHECK(tau.norm() <= phiTau + 1e-12);
        Vec2 dtau = saturation_error(tau, tauA);
        double expected = std::max(0.0, tauA.norm() - phiTau);
        CHECK(dtau.norm() == doctest::Approx(expected).epsilon(1e-12));
        // Collinearity: the clamp changes length only.
        CHECK(std::abs(tau(0) * tauA(1) - tau(1) * tauA(0)) <=
              1e-12 * std::max(1.0, tauA.squaredNorm()));
    }
}

TEST_CASE("projection is inactive inside and tangential at the boundary") {
    const double thetaBar = 2.0, epsProj = 0.2;

    // Interior estimate: identity.
    Vec6 thetaHat = Vec6::Zero();
    thetaHat(0) = 0.5;
    Vec6 y = Vec6::Ones();
    CHECK((projection(thetaHat, y, thetaBar, epsProj) - y).norm() == 0.0);

    // Outer boundary, radially outward drive: fully removed.
    Vec6 boundary = Vec6::Zero();
    boundary(2) = thetaBar;
    Vec6 out = projection(boundary, boundary, thetaBar, epsProj);
    CHECK(out.norm() < 1e-14);

    // Outward-pointing y keeps its tangential part only.
    Vec6 mixed = Vec6::Zero();
    mixed(0) = 1.0;
    mixed(2) = 0.5;
    Vec6 proj = projection(boundary, mixed, thetaBar, epsProj);
    CHECK(std::abs(proj(2)) < 1e-14);
    CHECK(proj(0) == doctest::Approx(1.0).epsilon(1e-14));

    // Inward or orthogonal drives pass through untouched.
    CHECK((projection(boundary, Vec6(-boundary), thetaBar, epsProj) +
           boundary)
              .norm() == 0.0);
    Vec6 ortho = Vec6::Zero();
    ortho(4) = 3.0;
    CHECK((projection(boundary, ortho, thetaBar, epsProj) - ortho).norm() ==
          0.0);
}

TEST_CASE("projection convexity inequality, 1000 draws") {
    const double thetaBar = 2.0, epsProj = 0.2;
    std::mt19937_64 rng(29);
    std::uniform_real_distribution<double> ur(0.0, 1.0);
    for (int i = 0; i < 1000; ++i) {
        // Estimate anywhere in the ball, comparison point in the shrunk ball.
        Vec6 thetaHat = random_vec6(rng, 1.0);
        thetaHat *= thetaBar * ur(rng) / std::max(thetaHat.norm(), 1e-12);
        Vec6 theta = random_vec6(rng, 1.0);
        theta *= (thetaBar - epsProj) * ur(rng) /
                 std::max(theta.norm(), 1e-12);
        Vec6 y = random_vec6(rng, 5.0);
        Vec6 proj = projection(thetaHat, y, thetaBar, epsProj);
        CHECK((theta - thetaHat).dot(proj - y) >= -1e-12);
    }
}

TEST_CASE("projected update never flows outward at the boundary") {
    const double thetaBar = 1.5, epsProj = 0.075;
    std::mt19937_64 rng(31);
    for (int i = 0; i < 1000; ++i) {
        Vec6 thetaHat = random_vec6(rng, 1.0);
        thetaHat *= thetaBar / thetaHat.norm();
        Vec6 y = random_vec6(rng, 4.0);
        Vec6 proj = projection(thetaHat, y, thetaBar, epsProj);
        CHECK(thetaHat.dot(proj) <= 1e-12);
    }
}

TEST_CASE("integrated projection stays inside the ball, 100 runs") {
    // Adaptation driven by an arbitrary bounded signal must never leave the
    // ball, whatever the drive does.
    const double thetaBar = 2.0, epsProj = 0.1, dt = 1e-3;
    std::mt19937_64 rng(37);
    std::uniform_real_distribution<double> ur(0.0, 1.0), uf(0.2, 3.0);
    for (int runIdx = 0; runIdx < 100; ++runIdx) {
        Vec6 theta = random_vec6(rng, 1.0);
        theta *= thetaBar * ur(rng) / std::max(theta.norm(), 1e-12);
        Vec6 amp = random_vec6(rng, 8.0);
        Vec6 phase = random_vec6(rng, 3.0);
        double freq = uf(rng);
        auto drive = [&](double t) -> Vec6 {
            Vec6 y;
            for (int k = 0; k < 6; ++k)
                y(k) = amp(k) * std::sin(freq * t + phase(k));
            return y;
        };
        auto f = [&](double t, const Vec6& th) {
            return projection(th, drive(t), thetaBar, epsProj);
        };
        double maxNorm = theta.norm();
        for (int stepIdx = 0; stepIdx < 1000; ++stepIdx) {
            double t = stepIdx * dt;
            Vec6 k1 = f(t, theta);
            Vec6 k2 = f(t + 0.5 * dt, theta + 0.5 * dt * k1);
            Vec6 k3 = f(t + 0.5 * dt, theta + 0.5 * dt * k2);
            Vec6 k4 = f(t + dt, theta + dt * k3);
            theta += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            maxNorm = std::max(maxNorm, theta.norm());
        }
        CHECK(maxNorm <= thetaBar + 1e-9);
    }
}

TEST_CASE("adaptation update direction, clamping and barrier rejection") {
    Mat6 Gamma = 2.0 * Mat6::Identity();
    const double phiR = 0.5, km2 = 0.0908, thetaBar = 3.0, epsProj = 0.15;
    const double epsDen = default_eps_den(km2, phiR);
    CHECK(epsDen == doctest::Approx(1e-9 * km2 * phiR * phiR).epsilon(1e-15));

    Mat26 Y = Mat26::Zero();
    Y(0, 0) = 1.0;
    Vec2 r(0.1, 0.0);
    Vec6 thetaHat = Vec6::Zero();

    bool clamped = true;
    Vec6 dot = adaptation_rhs(Y, r, Gamma, phiR, km2, thetaHat, thetaBar,
                              epsProj, epsDen, &clamped);
    CHECK_FALSE(clamped);
    double den = km2 * (phiR * phiR - r.squaredNorm());
    CHECK(dot(0) == doctest::Approx(2.0 * 0.1 / den).epsilon(1e-14));
    CHECK(dot.tail<5>().norm() == 0.0);

    // r = 0 gives a zero raw update.
    CHECK(adaptation_rhs(Y, Vec2::Zero(), Gamma, phiR, km2, thetaHat,
                         thetaBar, epsProj, epsDen, nullptr)
              .norm() == 0.0);

    // At or beyond the tube the update is undefined.
    CHECK_THROWS_AS(adaptation_rhs(Y, {0.5, 0.0}, Gamma, phiR, km2, thetaHat,
                                   thetaBar, epsProj, epsDen, nullptr),
                    BarrierViolation);
    CHECK_THROWS_AS(adaptation_rhs(Y, {0.7, 0.0}, Gamma, phiR, km2, thetaHat,
                                   thetaBar, epsProj, epsDen, nullptr),
                    BarrierViolation);

    // Just inside the tube the denominator floor engages and is reported.
    clamped = false;
    Vec2 nearEdge(phiR * (1.0 - 1e-14), 0.0);
    adaptation_rhs(Y, nearEdge, Gamma, phiR, km2, thetaHat, thetaBar, epsProj,
                   epsDen, &clamped);
    CHECK(clamped);
}

TEST_CASE("barrier value closed forms and divergence") {
    Mat2 M = 0.0908 * Mat2::Identity();
    const double phiR = 0.5, km2 = 0.0908;
    CHECK(blf_value(Vec2::Zero(), M, phiR, km2) == 0.0);

    // r^T M r at half the squared barrier level: 0.5*log 2.
    const double p2 = km2 * phiR * phiR;
    double rNorm = std::sqrt(0.5 * p2 / 0.0908);
    double v = blf_value({rNorm, 0.0}, M, phiR, km2);
    CHECK(v == doctest::Approx(0.5 * std::log(2.0)).epsilon(1e-12));
    CHECK(v == doctest::Approx(0.3466).epsilon(1e-3));

    // Monotone growth toward the boundary, divergence at it.
    double prev = 0.0;
    for (double frac : {0.5, 0.9, 0.99, 0.999999}) {
        double rn = phiR * std::sqrt(frac);
        double vr = blf_value({rn, 0.0}, M, phiR, km2);
        CHECK(vr > prev);
        prev = vr;
    }
    CHECK_THROWS_AS(blf_value({phiR, 0.0}, M, phiR, km2), BarrierViolation);
}

TEST_CASE("lyapunov value adds the weighted estimation error") {
    Mat2 M = 0.0908 * Mat2::Identity();
    Mat6 Gamma = 2.0 * Mat6::Identity();
    const double phiR = 0.5, km2 = 0.0908;

    CHECK(lyapunov_value(Vec2::Zero(), M, phiR, km2, Vec6::Zero(), Gamma) ==
          0.0);

    Vec6 e1 = Vec6::Zero();
    e1(0) = 1.0;
    double v1 = lyapunov_value(Vec2::Zero(), M, phiR, km2, e1, Gamma);
    CHECK(v1 == doctest::Approx(0.25).epsilon(1e-14));

    // The estimation term is an exact quadratic form.
    Vec2 r(0.2, -0.1);
    double vr = blf_value(r, M, phiR, km2);
    double va = lyapunov_value(r, M, phiR, km2, e1, Gamma);
    double vb = lyapunov_value(r, M, phiR, km2, Vec6(2.0 * e1), Gamma);
    CHECK(vb - vr == doctest::Approx(4.0 * (va - vr)).epsilon(1e-12));
}
