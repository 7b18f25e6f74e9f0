#pragma once

#include <vector>

#include "tvblf/envelope.hpp"
#include "tvblf/plant.hpp"

namespace tvblf {

struct ReferenceSample {
    Vec2 qd = Vec2::Zero();
    Vec2 qdotd = Vec2::Zero();
    Vec2 qddotd = Vec2::Zero();
};

// Desired trajectory with consistent derivatives and constant norm bounds.
// Two forms: a per-axis sinusoid qd_i = offset_i + amplitude_i*sin(omega t),
// or a sampled table with linear interpolation (held beyond its ends).
class ReferenceSpec {
  public:
    enum class Kind { Sinusoid, Table };

    static ReferenceSpec sinusoid(const Vec2& offset, const Vec2& amplitude,
                                  double omega);
    static ReferenceSpec table(std::vector<double> ts, std::vector<Vec2> qd,
                               std::vector<Vec2> qdotd,
                               std::vector<Vec2> qddotd);

    Kind kind() const { return kind_; }
    ReferenceSample eval(double t) const;

    // Constant envelopes dominating ||qd||, ||qdotd||, ||qddotd||. For tables
    // the bound is the max over samples (exact for the interpolant).
    EnvelopePtr positionBound() const;
    EnvelopePtr velocityBound() const;
    EnvelopePtr accelerationBound() const;

  private:
    ReferenceSpec() = default;

    Kind kind_ = Kind::Sinusoid;
    Vec2 offset_ = Vec2::Zero();
    Vec2 amplitude_ = Vec2::Zero();
    double omega_ = 0.0;
    std::vector<double> ts_;
    std::vector<Vec2> qd_, qdotd_, qddotd_;
};

// Exogenous input torque d(t) with known supremum norm.
struct DisturbanceSpec {
    enum class Kind { None, Sinusoid, Constant };

    Kind kind = Kind::None;
    Vec2 amplitude = Vec2::Zero();
    double omega = 0.0;

    static DisturbanceSpec none() { return {}; }
    static DisturbanceSpec sinusoid(const Vec2& amplitude, double omega);
    static DisturbanceSpec constant(const Vec2& amplitude);

    Vec2 eval(double t) const;
    double supNorm() const;
};

}  // namespace tvblf
