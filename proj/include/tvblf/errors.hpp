#pragma once

#include <limits>
#include <stdexcept>
#include <string>

namespace tvblf {

// Base class for all toolkit errors. Every failure that a caller can act on
// derives from this; plain std::exception escaping the library is a bug.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Malformed or inconsistent configuration input.
class ConfigError : public Error {
  public:
    using Error::Error;
};

// A function was evaluated outside its mathematical domain (for example the
// derivative of a power-rate profile with exponent below one at t = 0).
class DomainError : public Error {
  public:
    using Error::Error;
};

// The reference bound is not strictly dominated by the state bound somewhere
// on the evaluation grid, so no positive tracking-error envelope exists.
class InfeasibleReference : public Error {
  public:
    using Error::Error;
};

// Gain selection failed: the slope-gain margin inf(phi_edot/phi_e) - eps1 is
// not strictly positive.
class DegenerateGain : public Error {
  public:
    using Error::Error;
};

// The filtered-error envelope would be nonpositive somewhere on the grid.
class DegenerateEnvelope : public Error {
  public:
    using Error::Error;
};

// The voltage-to-torque map is not invertible.
class SingularMap : public Error {
  public:
    using Error::Error;
};

// The filtered error reached its envelope. `time` is the stage time at which
// the crossing was detected (NaN when thrown outside an integration context);
// the simulation state at the preceding accepted step is still valid.
class BarrierViolation : public Error {
  public:
    explicit BarrierViolation(const std::string& msg,
                              double t = std::numeric_limits<double>::quiet_NaN())
        : Error(msg), time(t) {}
    double time;
};

}  // namespace tvblf
