#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tvblf/feasibility.hpp"
#include "tvblf/sim.hpp"

namespace tvblf {

// A parsed configuration file. `sim` is complete except for the two pieces
// that the feasibility certificate supplies: `sim.gains.alpha` and
// `sim.env.phiR` stay unset until resolve_loop() adopts them from a
// certificate, so a run is always driven by exactly the quantities that
// were certified.
struct LoadedConfig {
    SimConfig sim;
    FeasibilityInputs feasibility;
    std::optional<double> alphaExplicit;
    double gridStep = 0.01;
    std::string units;  // "deg" | "rad"; angles are stored in radians either way
    std::string path;
};

// Parses and validates a JSON configuration file. Angle-valued fields
// (tracking envelopes, reference, initial state, measurement noise) are
// converted to radians when the file declares degrees; torque, gain, and
// parameter-space fields are never converted. Throws ConfigError on
// structural problems and DomainError on out-of-range values.
LoadedConfig load_config(const std::string& path);

// Runs the offline certificate on `lc.feasibility` and, when it selected a
// usable gain and tube, installs them into `lc.sim`. Returns the full report
// so callers can gate on the verdict. Never throws on an infeasible
// certificate; `lc.sim` is only touched when a gain and tube exist.
FeasibilityReport resolve_loop(LoadedConfig& lc);

// Trajectory log, one row per record, doubles printed with %.17g so a file
// round-trips bit-exactly.
void write_trajectory_csv(const std::string& path,
                          const std::vector<TrajectoryRecord>& log);

void write_summary_json(const std::string& path, const SummaryReport& summary);

// Margin sweep of a certificate. `degrees` is an optional second report
// evaluated in degree units; when present its margins are appended as a
// `margin_deg` column for side-by-side reading.
void write_margin_csv(const std::string& path, const FeasibilityReport& report,
                      const FeasibilityReport* degrees = nullptr);

// Certificate report as a JSON document. `marginSeriesPath` names the CSV
// holding the per-time margins (empty if none was written).
std::string feasibility_json(const FeasibilityReport& report,
                             const std::string& marginSeriesPath,
                             const std::string& units);

// Re-runs a certificate with all angle-valued envelopes rescaled to degrees;
// torque inputs are left alone. Used for the transparency column of the
// margin CSV when a config was authored in degrees.
FeasibilityReport check_feasibility_degrees(const FeasibilityInputs& inputs);

}  // namespace tvblf
