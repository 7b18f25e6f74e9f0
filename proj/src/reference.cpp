#include "tvblf/reference.hpp"

#include <algorithm>
#include <cmath>

namespace tvblf {

ReferenceSpec ReferenceSpec::sinusoid(const Vec2& offset,
                                      const Vec2& amplitude, double omega) {
    if (!(omega >= 0.0)) throw ConfigError("reference omega must be >= 0");
    ReferenceSpec r;
    r.kind_ = Kind::Sinusoid;
    r.offset_ = offset;
    r.amplitude_ = amplitude;
    r.omega_ = omega;
    return r;
}

ReferenceSpec ReferenceSpec::table(std::vector<double> ts,
                                   std::vector<Vec2> qd,
                                   std::vector<Vec2> qdotd,
                                   std::vector<Vec2> qddotd) {
    if (ts.size() < 2) throw ConfigError("reference table needs >= 2 samples");
    if (qd.size() != ts.size() || qdotd.size() != ts.size() ||
        qddotd.size() != ts.size())
        throw ConfigError("reference table columns have mismatched lengths");
    for (std::size_t i = 1; i < ts.size(); ++i)
        if (!(ts[i] > ts[i - 1]))
            throw ConfigError("reference table times must strictly increase");
    ReferenceSpec r;
    r.kind_ = Kind::Table;
    r.ts_ = std::move(ts);
    r.qd_ = std::move(qd);
    r.qdotd_ = std::move(qdotd);
    r.qddotd_ = std::move(qddotd);
    return r;
}

ReferenceSample ReferenceSpec::eval(double t) const {
    ReferenceSample out;
    if (kind_ == Kind::Sinusoid) {
        const double s = std::sin(omega_ * t);
        const double c = std::cos(omega_ * t);
        out.qd = offset_ + s * amplitude_;
        out.qdotd = omega_ * c * amplitude_;
        out.qddotd = -omega_ * omega_ * s * amplitude_;
        return out;
    }
    if (t <= ts_.front()) {
        out.qd = qd_.front();
        out.qdotd = qdotd_.front();
        out.qddotd = qddotd_.front();
        return out;
    }
    if (t >= ts_.back()) {
        out.qd = qd_.back();
        out.qdotd = qdotd_.back();
        out.qddotd = qddotd_.back();
        return out;
    }
    const auto it = std::upper_bound(ts_.begin(), ts_.end(), t);
    const std::size_t hi = static_cast<std::size_t>(it - ts_.begin());
    const std::size_t lo = hi - 1;
    const double w = (t - ts_[lo]) / (ts_[hi] - ts_[lo]);
    out.qd = (1.0 - w) * qd_[lo] + w * qd_[hi];
    out.qdotd = (1.0 - w) * qdotd_[lo] + w * qdotd_[hi];
    out.qddotd = (1.0 - w) * qddotd_[lo] + w * qddotd_[hi];
    return out;
}

namespace {

EnvelopePtr const_bound(double v) {
    return std::make_shared<ConstantEnvelope>(v);
}

double max_norm(const std::vector<Vec2>& xs) {
    double m = 0.0;
    for (const auto& x : xs) m = std::max(m, x.norm());
    return m;
}

}  // namespace

EnvelopePtr ReferenceSpec::positionBound() const {
    if (kind_ == Kind::Sinusoid)
        return const_bound(offset_.norm() + amplitude_.norm());
    return const_bound(max_norm(qd_));
}

EnvelopePtr ReferenceSpec::velocityBound() const {
    if (kind_ == Kind::Sinusoid)
        return const_bound(omega_ * amplitude_.norm());
    return const_bound(max_norm(qdotd_));
}

EnvelopePtr ReferenceSpec::accelerationBound() const {
    if (kind_ == Kind::Sinusoid)
        return const_bound(omega_ * omega_ * amplitude_.norm());
    return const_bound(max_norm(qddotd_));
}

DisturbanceSpec DisturbanceSpec::sinusoid(const Vec2& amplitude,
                                          double omega) {
    DisturbanceSpec d;
    d.kind = Kind::Sinusoid;
    d.amplitude = amplitude;
    d.omega = omega;
    return d;
}

DisturbanceSpec DisturbanceSpec::constant(const Vec2& amplitude) {
    DisturbanceSpec d;
    d.kind = Kind::Constant;
    d.amplitude = amplitude;
    return d;
}

Vec2 DisturbanceSpec::eval(double t) const {
    switch (kind) {
        case Kind::None:
            return Vec2::Zero();
        case Kind::Sinusoid:
            return std::sin(omega * t) * amplitude;
        case Kind::Constant:
            return amplitude;
    }
    return Vec2::Zero();
}

double DisturbanceSpec::supNorm() const {
    return kind == Kind::None ? 0.0 : amplitude.norm();
}

}  // namespace tvblf
