#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tvblf/envelope.hpp"
#include "tvblf/plant.hpp"

namespace tvblf {

// Everything the offline certificate needs. The certificate never simulates:
// it works entirely from bounds, gains and envelopes on the evaluation grid.
struct FeasibilityInputs {
    BoundConstants bounds;
    EnvelopePtr phiE;
    EnvelopePtr phiEdot;
    EnvelopePtr phiTau;
    EnvelopePtr phiQdotd;   // reference velocity norm bound
    EnvelopePtr phiQddotd;  // reference acceleration norm bound
    Mat2 K = Mat2::Zero();
    TimeGrid grid;
    double eps1 = 0.05;
    // Shrink margin for phi_r; defaults to 5% of the unshrunk infimum.
    std::optional<double> eps2;
    // Explicit slope gain. When absent the gain is selected from eps1; when
    // present it is validated against the strict rate-ratio inequality so the
    // certified loop is exactly the one that will run.
    std::optional<double> alpha;
    bool disturbed = false;
};

struct MarginSample {
    double t = 0.0;
    double phiTau = 0.0;    // available input authority
    double required = 0.0;  // worst-case demand at t
    double margin = 0.0;    // phiTau - required
};

struct FeasibilityReport {
    bool feasible = false;
    // Empty when feasible; otherwise GainDegenerate, EnvelopeDegenerate or
    // C1Violated.
    std::string failureReason;
    std::string detail;
    double alphaSelected = 0.0;
    double eps2 = 0.0;
    EnvelopePtr phiR;  // null when construction failed
    std::string phiRDescriptor;
    double worstMargin = 0.0;
    double worstTime = 0.0;
    double gridStep = 0.0;
    bool disturbed = false;
    std::vector<MarginSample> margins;
};

// Coefficient of the quadratic envelope term: 6 * thetaBar * kv.
double psi1(const BoundConstants& b);

// Coefficient of the linear envelope term at time t:
//   thetaBar*(2*alpha*km2 + 5*kv*(alpha*phiE0 + phiQdotd(t)) + 2*kf2)
//   + lammax(K).
double psi2(double t, const BoundConstants& b, double alpha, const Mat2& K,
            double phiE0, const Envelope& phiQdotd);

// Constant demand term at time t: worst-case inertia feedforward, Coriolis,
// gravity and friction,
//   thetaBar*(km2*(alpha^2*phiE0 + phiQddotd(t))
//             + kv*(alpha*phiE0 + phiQdotd(t))^2
//             + kg + kf1 + kf2*(alpha*phiE0 + phiQdotd(t))).
double psi3(double t, const BoundConstants& b, double alpha, double phiE0,
            const Envelope& phiQdotd, const Envelope& phiQddotd);

// Input-authority margin at time t:
//   phiTau(t) - [(psi1*phiR(t) + (psi2At - lammin(K)) + |phiRdot(t)|*km2)
//                * phiR(t) + psi3At]
// minus dBar when disturbed. Positive margin means the saturated law can
// always hold the barrier at this time.
double c1_margin(double t, const Envelope& phiTau, const Envelope& phiR,
                 const BoundConstants& b, double psi1Val, double psi2At,
                 double psi3At, const Mat2& K, bool disturbed);

// Offline certificate: selects (or validates) the slope gain, builds the
// filtered-error envelope, and sweeps the input-authority inequality over the
// grid. Never throws for mathematical infeasibility; that is reported through
// failureReason.
FeasibilityReport check_feasibility(const FeasibilityInputs& in);

}  // namespace tvblf
