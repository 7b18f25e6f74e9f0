#include "tvblf/feasibility.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

#include <Eigen/Eigenvalues>

namespace tvblf {

namespace {

std::string fmt(const char* pattern, double a) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), pattern, a);
    return buf;
}

Vec2 eigenvalue_range(const Mat2& K) {
    Eigen::SelfAdjointEigenSolver<Mat2> es(K);
    return {es.eigenvalues().minCoeff(), es.eigenvalues().maxCoeff()};
}

}  // namespace

double psi1(const BoundConstants& b) { return 6.0 * b.thetaBar * b.kv; }

double psi2(double t, const BoundConstants& b, double alpha, const Mat2& K,
            double phiE0, const Envelope& phiQdotd) {
    const double vbound = alpha * phiE0 + phiQdotd.value(t);
    return b.thetaBar * (2.0 * alpha * b.km2 + 5.0 * b.kv * vbound +
                         2.0 * b.kf2) +
           eigenvalue_range(K)(1);
}

double psi3(double t, const BoundConstants& b, double alpha, double phiE0,
            const Envelope& phiQdotd, const Envelope& phiQddotd) {
    const double vbound = alpha * phiE0 + phiQdotd.value(t);
    return b.thetaBar *
           (b.km2 * (alpha * alpha * phiE0 + phiQddotd.value(t)) +
            b.kv * vbound * vbound + b.kg + b.kf1 + b.kf2 * vbound);
}

double c1_margin(double t, const Envelope& phiTau, const Envelope& phiR,
                 const BoundConstants& b, double psi1Val, double psi2At,
                 double psi3At, const Mat2& K, bool disturbed) {
    // psi2 is kept unclamped: lammin(K) > psi2 would make the reduced
    // coefficient negative and the algebra permits that.
    const double psi2Reduced = psi2At - eigenvalue_range(K)(0);
    const double phiRT = phiR.value(t);
    const double phiRdotT = phiR.derivative(t);
    double required =
        (psi1Val * phiRT + psi2Reduced + std::abs(phiRdotT) * b.km2) * phiRT +
        psi3At;
    if (disturbed) required += b.dBar;
    return phiTau.value(t) - required;
}

FeasibilityReport check_feasibility(const FeasibilityInputs& in) {
    if (!in.phiE || !in.phiEdot || !in.phiTau || !in.phiQdotd || !in.phiQddotd)
        throw ConfigError("feasibility check requires all envelopes");
    if (in.grid.size() < 2) throw ConfigError("evaluation grid is empty");

    FeasibilityReport rep;
    rep.gridStep = in.grid.step;
    rep.disturbed = in.disturbed;

    // Gain selection or validation.
    if (in.alpha) {
        rep.alphaSelected = *in.alpha;
        bool ok = rep.alphaSelected > 0.0;
        double worstRatio = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; ok && i < in.grid.size(); ++i) {
            const double t = in.grid.at(i);
            const double ratio = in.phiEdot->value(t) / in.phiE->value(t);
            worstRatio = std::min(worstRatio, ratio);
            if (!(rep.alphaSelected < ratio)) ok = false;
        }
        if (!ok) {
            rep.failureReason = "GainDegenerate";
            rep.detail = fmt("explicit gain %g", rep.alphaSelected) +
                         fmt(" violates the strict rate-ratio bound %g",
                             worstRatio);
            return rep;
        }
    } else {
        try {
            rep.alphaSelected =
                select_alpha(*in.phiE, *in.phiEdot, in.grid, in.eps1);
        } catch (const DegenerateGain& ex) {
            rep.failureReason = "GainDegenerate";
            rep.detail = ex.what();
            return rep;
        }
    }

    // Filtered-error envelope.
    try {
        PhiRResult pr = phi_r_envelope(in.phiE, in.phiEdot, rep.alphaSelected,
                                       in.grid, in.eps2);
        rep.phiR = pr.envelope;
        rep.eps2 = pr.eps2;
        rep.phiRDescriptor = pr.envelope->describe();
    } catch (const DegenerateEnvelope& ex) {
        rep.failureReason = "EnvelopeDegenerate";
        rep.detail = ex.what();
        return rep;
    }

    // Input-authority sweep.
    const double phiE0 = in.phiE->value(0.0);
    const double p1 = psi1(in.bounds);
    rep.margins.reserve(in.grid.size());
    rep.worstMargin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < in.grid.size(); ++i) {
        const double t = in.grid.at(i);
        const double p2 = psi2(t, in.bounds, rep.alphaSelected, in.K, phiE0,
                               *in.phiQdotd);
        const double p3 = psi3(t, in.bounds, rep.alphaSelected, phiE0,
                               *in.phiQdotd, *in.phiQddotd);
        const double phiTauT = in.phiTau->value(t);
        const double margin = c1_margin(t, *in.phiTau, *rep.phiR, in.bounds,
                                        p1, p2, p3, in.K, in.disturbed);
        rep.margins.push_back({t, phiTauT, phiTauT - margin, margin});
        if (margin < rep.worstMargin) {
            rep.worstMargin = margin;
            rep.worstTime = t;
        }
    }

    rep.feasible = rep.worstMargin > 0.0;
    if (!rep.feasible) {
        rep.failureReason = "C1Violated";
        rep.detail = fmt("input authority short by %g", -rep.worstMargin) +
                     fmt(" at t = %g", rep.worstTime);
    }
    return rep;
}

}  // namespace tvblf
