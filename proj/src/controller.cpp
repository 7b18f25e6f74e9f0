#include "tvblf/controller.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

namespace tvblf {

namespace {

bool symmetric_positive_definite(const Eigen::MatrixXd& A) {
    if ((A - A.transpose()).cwiseAbs().maxCoeff() >
        1e-12 * (1.0 + A.cwiseAbs().maxCoeff()))
        return false;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
    return es.eigenvalues().minCoeff() > 0.0;
}

}  // namespace

void validate_gains(const ControllerGains& g) {
    if (!(g.alpha > 0.0)) throw ConfigError("gain alpha must be positive");
    if (!symmetric_positive_definite(g.K))
        throw ConfigError("feedback gain K must be symmetric positive definite");
    if (!symmetric_positive_definite(g.Gamma))
        throw ConfigError(
            "adaptation gain Gamma must be symmetric positive definite");
    if (!(g.epsProj > 0.0) || !(g.epsProj < g.thetaBar))
        throw ConfigError("projection requires 0 < epsProj < thetaBar");
}

Vec2 filtered_error(const Vec2& e, const Vec2& edot, double alpha) {
    return edot + alpha * e;
}

Vec2 auxiliary_control(const Mat26& Y, const Vec6& thetaHat, const Mat2& K,
                       const Vec2& r, double phiR, double phiRdot,
                       double km2) {
    return -Y * thetaHat - K * r + (phiRdot / phiR) * km2 * r;
}

Vec2 saturate(const Vec2& tauA, double phiTau) {
    if (!(phiTau > 0.0)) throw DomainError("input bound must be positive");
    const double n = tauA.norm();
    if (n <= phiTau) return tauA;
    return tauA * (phiTau / n);
}

Vec2 saturation_error(const Vec2& tau, const Vec2& tauA) { return tau - tauA; }

Vec6 projection(const Vec6& thetaHat, const Vec6& y, double thetaBar,
                double epsProj) {
    if (!(epsProj > 0.0) || !(epsProj < thetaBar))
        throw DomainError("projection requires 0 < epsProj < thetaBar");
    const double inner2 = (thetaBar - epsProj) * (thetaBar - epsProj);
    const double span = thetaBar * thetaBar - inner2;
    const double f = (thetaHat.squaredNorm() - inner2) / span;
    const double outward = thetaHat.dot(y);
    if (f <= 0.0 || outward <= 0.0) return y;
    // Remove the outward radial component scaled by f; at the ball boundary
    // f = 1 and the radial growth is cancelled exactly.
    return y - f * outward / thetaHat.squaredNorm() * thetaHat;
}

double default_eps_den(double km2, double phiR0) {
    return 1e-9 * km2 * phiR0 * phiR0;
}

Vec6 adaptation_rhs(const Mat26& Y, const Vec2& r, const Mat6& Gamma,
                    double phiR, double km2, const Vec6& thetaHat,
                    double thetaBar, double epsProj, double epsDen,
                    bool* clamped) {
    const double rn2 = r.squaredNorm();
    if (!(rn2 < phiR * phiR))
        throw BarrierViolation("adaptation evaluated at or beyond the barrier");
    double den = km2 * (phiR * phiR - rn2);
    const bool floorEngaged = den < epsDen;
    if (floorEngaged) den = epsDen;
    if (clamped) *clamped = floorEngaged;
    const Vec6 raw = Gamma * (Y.transpose() * r) / den;
    return projection(thetaHat, raw, thetaBar, epsProj);
}

double blf_value(const Vec2& r, const Mat2& M, double phiR, double km2) {
    const double p2 = km2 * phiR * phiR;
    const double rMr = r.dot(M * r);
    if (!(rMr < p2))
        throw BarrierViolation(
            "barrier value undefined at or beyond the boundary");
    return 0.5 * std::log(p2 / (p2 - rMr));
}

double lyapunov_value(const Vec2& r, const Mat2& M, double phiR, double km2,
                      const Vec6& thetaTilde, const Mat6& Gamma) {
    return blf_value(r, M, phiR, km2) +
           0.5 * thetaTilde.dot(Gamma.llt().solve(thetaTilde));
}

}  // namespace tvblf
