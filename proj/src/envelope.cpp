#include "tvblf/envelope.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>

namespace tvblf {

namespace {

std::string fmt(const char* pattern, double a) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), pattern, a);
    return buf;
}

// Envelope defined by an arbitrary callable; derivative falls back to the
// base-class finite difference. Internal building block for phi_r branches.
class FunctionEnvelope final : public Envelope {
  public:
    FunctionEnvelope(std::function<double(double)> fn, std::string text,
                     bool unboundedSlope)
        : fn_(std::move(fn)),
          text_(std::move(text)),
          unboundedSlope_(unboundedSlope) {}

    double value(double t) const override { return fn_(t); }
    std::string describe() const override { return text_; }
    bool unboundedInitialSlope() const override { return unboundedSlope_; }

  private:
    std::function<double(double)> fn_;
    std::string text_;
    bool unboundedSlope_;
};

}  // namespace

// --- TimeGrid ---------------------------------------------------------------

TimeGrid TimeGrid::over(double tEnd, double step) {
    if (!(tEnd > 0.0) || !(step > 0.0))
        throw ConfigError("time grid requires tEnd > 0 and step > 0");
    const double ratio = tEnd / step;
    const auto n = static_cast<long long>(std::llround(ratio));
    if (n < 1 || std::abs(static_cast<double>(n) * step - tEnd) >
                     1e-9 * std::max(1.0, tEnd))
        throw ConfigError(fmt("grid step %g", step) +
                          fmt(" does not divide horizon %g", tEnd));
    TimeGrid g;
    g.tEnd = tEnd;
    g.step = step;
    g.count_ = static_cast<std::size_t>(n) + 1;
    return g;
}

// --- Envelope base ----------------------------------------------------------

double Envelope::derivative(double t) const {
    const double h = kFdStep;
    if (t < h) return (value(t + h) - value(t)) / h;
    return (value(t + h) - value(t - h)) / (2.0 * h);
}

// --- PpfEnvelope ------------------------------------------------------------

PpfEnvelope::PpfEnvelope(double phi0, double phiInf, double kappa, double nu)
    : phi0_(phi0), phiInf_(phiInf), kappa_(kappa), nu_(nu) {
    // phi0 == phiInf is allowed and degenerates to a constant profile.
    if (!(phiInf > 0.0) || !(phi0 >= phiInf))
        throw DomainError("ppf profile requires phi0 >= phiInf > 0");
    if (!(kappa > 0.0) || !(nu > 0.0))
        throw DomainError("ppf profile requires kappa > 0 and nu > 0");
}

double PpfEnvelope::value(double t) const {
    const double tn = nu_ == 1.0 ? t : std::pow(t, nu_);
    return (phi0_ - phiInf_) / (1.0 + kappa_ * tn) + phiInf_;
}

double PpfEnvelope::derivative(double t) const {
    if (t == 0.0) {
        if (nu_ < 1.0)
            throw DomainError("ppf slope diverges at t = 0 for nu < 1");
        if (nu_ > 1.0) return 0.0;
        return -(phi0_ - phiInf_) * kappa_;
    }
    const double tn = nu_ == 1.0 ? t : std::pow(t, nu_);
    const double den = 1.0 + kappa_ * tn;
    return -(phi0_ - phiInf_) * kappa_ * nu_ * std::pow(t, nu_ - 1.0) /
           (den * den);
}

std::string PpfEnvelope::describe() const {
    return "ppf(phi0=" + fmt("%g", phi0_) + ", phiInf=" + fmt("%g", phiInf_) +
           ", kappa=" + fmt("%g", kappa_) + ", nu=" + fmt("%g", nu_) + ")";
}

double convergence_time(const PpfEnvelope& env, double eps) {
    if (eps <= env.phiInf())
        throw DomainError(fmt("level %g", eps) +
                          fmt(" is never reached (floor %g)", env.phiInf()));
    if (eps >= env.phi0()) return 0.0;
    const double inner =
        ((env.phi0() - env.phiInf()) / (eps - env.phiInf()) - 1.0) /
        env.kappa();
    return std::pow(inner, 1.0 / env.nu());
}

// --- ConstantEnvelope -------------------------------------------------------

ConstantEnvelope::ConstantEnvelope(double value) : value_(value) {
    // Zero is allowed: reference norm bounds may vanish (constant reference).
    // Barrier envelopes are checked for strict positivity where they are built.
    if (!(value >= 0.0))
        throw DomainError("constant envelope must be nonnegative");
}

std::string ConstantEnvelope::describe() const {
    return "const(" + fmt("%g", value_) + ")";
}

// --- Combinators ------------------------------------------------------------

ShiftedEnvelope::ShiftedEnvelope(EnvelopePtr base, double offset)
    : base_(std::move(base)), offset_(offset) {
    if (!base_) throw DomainError("shifted envelope requires a base");
}

std::string ShiftedEnvelope::describe() const {
    if (offset_ < 0.0)
        return base_->describe() + " - " + fmt("%g", -offset_);
    return base_->describe() + " + " + fmt("%g", offset_);
}

ScaledEnvelope::ScaledEnvelope(EnvelopePtr base, double factor)
    : base_(std::move(base)), factor_(factor) {
    if (!base_) throw DomainError("scaled envelope requires a base");
    if (!(factor > 0.0))
        throw DomainError("scaled envelope requires a positive factor, got " +
                          fmt("%g", factor));
}

std::string ScaledEnvelope::describe() const {
    return fmt("%g", factor_) + " * (" + base_->describe() + ")";
}

SumEnvelope::SumEnvelope(EnvelopePtr a, EnvelopePtr b)
    : a_(std::move(a)), b_(std::move(b)) {
    if (!a_ || !b_) throw DomainError("sum envelope requires two members");
}

std::string SumEnvelope::describe() const {
    return "(" + a_->describe() + ") + (" + b_->describe() + ")";
}

DifferenceEnvelope::DifferenceEnvelope(EnvelopePtr a, EnvelopePtr b)
    : a_(std::move(a)), b_(std::move(b)) {
    if (!a_ || !b_)
        throw DomainError("difference envelope requires two members");
}

std::string DifferenceEnvelope::describe() const {
    return "(" + a_->describe() + ") - (" + b_->describe() + ")";
}

PointwiseMinEnvelope::PointwiseMinEnvelope(std::vector<EnvelopePtr> members)
    : members_(std::move(members)) {
    if (members_.size() < 2)
        throw DomainError("pointwise min requires at least two members");
    for (const auto& m : members_)
        if (!m) throw DomainError("pointwise min member is null");
}

double PointwiseMinEnvelope::value(double t) const {
    double v = std::numeric_limits<double>::infinity();
    for (const auto& m : members_) v = std::min(v, m->value(t));
    return v;
}

std::string PointwiseMinEnvelope::describe() const {
    std::string out = "min(";
    for (std::size_t i = 0; i < members_.size(); ++i) {
        if (i) out += ", ";
        out += members_[i]->describe();
    }
    return out + ")";
}

bool PointwiseMinEnvelope::unboundedInitialSlope() const {
    for (const auto& m : members_)
        if (m->unboundedInitialSlope()) return true;
    return false;
}

// --- Diagnostics ------------------------------------------------------------

ValidationReport validate(const Envelope& env, const TimeGrid& grid) {
    ValidationReport rep;
    const double h = 1e-4;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double t = grid.at(i);
        if (!(env.value(t) > 0.0)) rep.positivityViolations.push_back(t);
        if (t - h < 0.0 || t + h > grid.tEnd) continue;
        const double fd = (env.value(t + h) - env.value(t - h)) / (2.0 * h);
        const double gap =
            std::abs(env.derivative(t) - fd) / std::max(1.0, std::abs(fd));
        if (gap > rep.maxDerivativeGap) {
            rep.maxDerivativeGap = gap;
            rep.maxGapTime = t;
        }
    }
    if (env.unboundedInitialSlope())
        rep.warnings.push_back("slope diverges at t = 0");
    if (rep.maxDerivativeGap > 1e-3)
        rep.warnings.push_back(fmt("derivative mismatch %g", rep.maxDerivativeGap) +
                               fmt(" at t = %g", rep.maxGapTime));
    if (!rep.positivityViolations.empty())
        rep.warnings.push_back(
            fmt("nonpositive value at t = %g", rep.positivityViolations.front()));
    return rep;
}

// --- Bound construction -----------------------------------------------------

std::pair<EnvelopePtr, EnvelopePtr> error_envelopes(const EnvelopePtr& phiQ,
                                                    const EnvelopePtr& phiQdot,
                                                    const EnvelopePtr& phiQd,
                                                    const EnvelopePtr& phiQdotd,
                                                    const TimeGrid& grid) {
    auto phiE = std::make_shared<DifferenceEnvelope>(phiQ, phiQd);
    auto phiEdot = std::make_shared<DifferenceEnvelope>(phiQdot, phiQdotd);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double t = grid.at(i);
        if (!(phiE->value(t) > 0.0))
            throw InfeasibleReference(
                fmt("position bound not dominated at t = %g", t) +
                fmt(": state %g", phiQ->value(t)) +
                fmt(" <= reference %g", phiQd->value(t)));
        if (!(phiEdot->value(t) > 0.0))
            throw InfeasibleReference(
                fmt("velocity bound not dominated at t = %g", t) +
                fmt(": state %g", phiQdot->value(t)) +
                fmt(" <= reference %g", phiQdotd->value(t)));
    }
    return {phiE, phiEdot};
}

double select_alpha(const Envelope& phiE, const Envelope& phiEdot,
                    const TimeGrid& grid, double eps1) {
    if (!(eps1 > 0.0)) throw DomainError("eps1 must be positive");
    double inf = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double t = grid.at(i);
        inf = std::min(inf, phiEdot.value(t) / phiE.value(t));
    }
    const double alpha = inf - eps1;
    if (!(alpha > 0.0))
        throw DegenerateGain(fmt("rate ratio infimum %g", inf) +
                             fmt(" leaves no positive gain after eps1 = %g", eps1));
    return alpha;
}

PhiRResult phi_r_envelope(const EnvelopePtr& phiE, const EnvelopePtr& phiEdot,
                          double alpha, const TimeGrid& grid,
                          std::optional<double> eps2) {
    if (!phiE || !phiEdot) throw DomainError("phi_r requires error envelopes");
    if (!(alpha > 0.0)) throw DomainError("phi_r requires alpha > 0");

    // Both branches must hold for the filtered error to imply the state
    // bounds: the first caps the attainable decay rate of |e|, the second the
    // velocity headroom once |e| is at its bound.
    const EnvelopePtr pe = phiE;
    auto branch1 = std::make_shared<FunctionEnvelope>(
        [pe, alpha](double t) {
            return pe->derivative(t) + alpha * pe->value(t);
        },
        "dphi_e/dt + alpha*phi_e", pe->unboundedInitialSlope());
    const EnvelopePtr ped = phiEdot;
    auto branch2 = std::make_shared<FunctionEnvelope>(
        [pe, ped, alpha](double t) {
            return ped->value(t) - alpha * pe->value(t);
        },
        "phi_edot - alpha*phi_e", ped->unboundedInitialSlope());

    auto minEnv = std::make_shared<PointwiseMinEnvelope>(
        std::vector<EnvelopePtr>{branch1, branch2});

    double inf = std::numeric_limits<double>::infinity();
    double infTime = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double t = grid.at(i);
        const double v = minEnv->value(t);
        if (v < inf) {
            inf = v;
            infTime = t;
        }
    }
    const double margin = eps2 ? *eps2 : 0.05 * inf;
    if (!(margin >= 0.0)) throw DomainError("eps2 must be nonnegative");
    if (!(inf - margin > 0.0))
        throw DegenerateEnvelope(
            fmt("filtered-error bound nonpositive: infimum %g", inf) +
            fmt(" at t = %g", infTime) + fmt(" minus eps2 = %g", margin));

    PhiRResult out;
    out.envelope = std::make_shared<ShiftedEnvelope>(minEnv, -margin);
    out.eps2 = margin;
    out.infPhiMax = inf;
    return out;
}

}  // namespace tvblf
