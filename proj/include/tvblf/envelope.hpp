#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tvblf/errors.hpp"

namespace tvblf {

// Uniform evaluation grid over [0, tEnd]. step must divide tEnd to within
// rounding; grid point i sits at i*step and the last point is exactly tEnd.
struct TimeGrid {
    double tEnd = 60.0;
    double step = 0.01;

    static TimeGrid over(double tEnd, double step);

    std::size_t size() const { return count_; }
    double at(std::size_t i) const {
        return i + 1 == count_ ? tEnd : static_cast<double>(i) * step;
    }

  private:
    std::size_t count_ = 0;
};

// A strictly positive time-varying bound phi(t), t >= 0. Derivatives default
// to a central finite difference; subclasses with closed forms override.
class Envelope {
  public:
    virtual ~Envelope() = default;

    virtual double value(double t) const = 0;
    virtual double derivative(double t) const;

    // One-line construction summary for reports.
    virtual std::string describe() const = 0;

    // True when derivative(0) does not exist (slope diverges as t -> 0+).
    virtual bool unboundedInitialSlope() const { return false; }

  protected:
    // Finite-difference half width for the default derivative; one-sided
    // differences are used within kFdStep of t = 0.
    static constexpr double kFdStep = 1e-6;
};

using EnvelopePtr = std::shared_ptr<const Envelope>;

// Prescribed-performance profile
//   phi(t) = (phi0 - phiInf) / (1 + kappa * t^nu) + phiInf,
// strictly decreasing from phi0 to phiInf when phi0 > phiInf. phi0 == phiInf
// yields the constant profile. For nu < 1 the slope diverges at t = 0 and
// derivative(0) throws DomainError.
class PpfEnvelope final : public Envelope {
  public:
    PpfEnvelope(double phi0, double phiInf, double kappa, double nu);

    double value(double t) const override;
    double derivative(double t) const override;
    std::string describe() const override;
    bool unboundedInitialSlope() const override { return nu_ < 1.0; }

    double phi0() const { return phi0_; }
    double phiInf() const { return phiInf_; }
    double kappa() const { return kappa_; }
    double nu() const { return nu_; }

  private:
    double phi0_, phiInf_, kappa_, nu_;
};

// First time at which a decaying profile reaches level eps, i.e. the unique
// t with phi(t) = eps. Returns 0 when phi0 <= eps already; throws DomainError
// when eps <= phiInf (the level is never reached).
double convergence_time(const PpfEnvelope& env, double eps);

class ConstantEnvelope final : public Envelope {
  public:
    explicit ConstantEnvelope(double value);

    double value(double) const override { return value_; }
    double derivative(double) const override { return 0.0; }
    std::string describe() const override;

  private:
    double value_;
};

// base(t) + offset. The offset may be negative; positivity of the result is
// the caller's obligation (phi_r construction checks it on the grid).
class ShiftedEnvelope final : public Envelope {
  public:
    ShiftedEnvelope(EnvelopePtr base, double offset);

    double value(double t) const override { return base_->value(t) + offset_; }
    double derivative(double t) const override { return base_->derivative(t); }
    std::string describe() const override;
    bool unboundedInitialSlope() const override {
        return base_->unboundedInitialSlope();
    }

  private:
    EnvelopePtr base_;
    double offset_;
};

// factor * base(t) with factor > 0. Unit changes, e.g. radians to degrees.
class ScaledEnvelope final : public Envelope {
  public:
    ScaledEnvelope(EnvelopePtr base, double factor);

    double value(double t) const override {
        return factor_ * base_->value(t);
    }
    double derivative(double t) const override {
        return factor_ * base_->derivative(t);
    }
    std::string describe() const override;
    bool unboundedInitialSlope() const override {
        return base_->unboundedInitialSlope();
    }

  private:
    EnvelopePtr base_;
    double factor_;
};

class SumEnvelope final : public Envelope {
  public:
    SumEnvelope(EnvelopePtr a, EnvelopePtr b);

    double value(double t) const override {
        return a_->value(t) + b_->value(t);
    }
    double derivative(double t) const override {
        return a_->derivative(t) + b_->derivative(t);
    }
    std::string describe() const override;
    bool unboundedInitialSlope() const override {
        return a_->unboundedInitialSlope() || b_->unboundedInitialSlope();
    }

  private:
    EnvelopePtr a_, b_;
};

// a(t) - b(t). Used for tracking-error bounds phi_e = phi_q - phi_qd; the
// result must be checked for positivity before use as an envelope.
class DifferenceEnvelope final : public Envelope {
  public:
    DifferenceEnvelope(EnvelopePtr a, EnvelopePtr b);

    double value(double t) const override {
        return a_->value(t) - b_->value(t);
    }
    double derivative(double t) const override {
        return a_->derivative(t) - b_->derivative(t);
    }
    std::string describe() const override;
    bool unboundedInitialSlope() const override {
        return a_->unboundedInitialSlope() || b_->unboundedInitialSlope();
    }

  private:
    EnvelopePtr a_, b_;
};

// Pointwise minimum of two or more members. The derivative is the default
// finite difference of the min, which at a branch crossing reports a blend of
// the two slopes; downstream uses (barrier feedback, certificate) only need
// the value and a bounded slope estimate.
class PointwiseMinEnvelope final : public Envelope {
  public:
    explicit PointwiseMinEnvelope(std::vector<EnvelopePtr> members);

    double value(double t) const override;
    std::string describe() const override;
    bool unboundedInitialSlope() const override;

  private:
    std::vector<EnvelopePtr> members_;
};

struct ValidationReport {
    // Grid times where value(t) <= 0.
    std::vector<double> positivityViolations;
    // Largest |derivative - central difference| over interior grid points,
    // normalized by max(1, |central difference|), and where it occurred.
    double maxDerivativeGap = 0.0;
    double maxGapTime = 0.0;
    std::vector<std::string> warnings;

    bool clean() const {
        return positivityViolations.empty() && warnings.empty();
    }
};

// Diagnostic sweep: positivity at every grid point and derivative consistency
// against a central difference with half width 1e-4 (deliberately different
// from the class-internal step so numeric derivatives are cross-checked, not
// self-compared). Kinks of min-envelopes surface as warnings.
ValidationReport validate(const Envelope& env, const TimeGrid& grid);

// All bounds one experiment needs, in controller units (radians).
struct EnvelopeSet {
    EnvelopePtr phiQ;        // state position bound
    EnvelopePtr phiQdot;     // state velocity bound
    EnvelopePtr phiQd;       // reference position bound
    EnvelopePtr phiQdotd;    // reference velocity bound
    EnvelopePtr phiQddotd;   // reference acceleration bound
    EnvelopePtr phiE;        // tracking-error bound, strictly positive
    EnvelopePtr phiEdot;     // error-rate bound, strictly positive
    EnvelopePtr phiR;        // filtered-error bound, strictly positive
    EnvelopePtr phiTau;      // input-norm bound
    double alpha = 0.0;      // slope gain, alpha < phiEdot/phiE on the grid
};

// Tracking-error bounds from state and reference bounds:
//   phi_e = phi_q - phi_qd,  phi_edot = phi_qdot - phi_qdotd.
// Throws InfeasibleReference when either is nonpositive at a grid point.
std::pair<EnvelopePtr, EnvelopePtr> error_envelopes(const EnvelopePtr& phiQ,
                                                    const EnvelopePtr& phiQdot,
                                                    const EnvelopePtr& phiQd,
                                                    const EnvelopePtr& phiQdotd,
                                                    const TimeGrid& grid);

// Largest constant slope gain compatible with the error bounds:
//   alpha = inf over the grid of phi_edot/phi_e, minus eps1.
// Throws DegenerateGain when the result is not strictly positive.
double select_alpha(const Envelope& phiE, const Envelope& phiEdot,
                    const TimeGrid& grid, double eps1);

struct PhiRResult {
    EnvelopePtr envelope;
    double eps2;       // applied shrink margin
    double infPhiMax;  // inf over the grid of the unshrunk bound
};

// Filtered-error bound
//   phi_r = min(dphi_e/dt + alpha*phi_e, phi_edot - alpha*phi_e) - eps2,
// with eps2 defaulting to 5% of the inf of the min term. Throws
// DegenerateEnvelope when the result is nonpositive somewhere on the grid.
PhiRResult phi_r_envelope(const EnvelopePtr& phiE, const EnvelopePtr& phiEdot,
                          double alpha, const TimeGrid& grid,
                          std::optional<double> eps2 = std::nullopt);

}  // namespace tvblf
