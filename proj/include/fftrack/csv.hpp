#pragma once

#include <fstream>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "fftrack/closed_loop.hpp"
#include "fftrack/model_verification.hpp"

namespace fftrack::csv {

/// Column layouts. Time is always the first column, values are SI and
/// written with 12 significant digits.
///
///   verification: t, {oracle,euler,ltv}_{s,y,theta,delta,v,alpha}, delta_in, alpha_in
///   nominal:      t, ref_{s,y,theta,v}, s, y, theta, delta, v, alpha, delta_in, alpha_in
///                 (the input columns of the last row are empty)
///   ticks:        t, plan, {true,meas,nom}_{s,y,theta,delta,v,alpha},
///                 ff_{delta,alpha}, fb_{delta,alpha}, u_{delta,alpha}, saturated
///   plans:        t, horizon, objective, iterations, active, kkt_max
///   gains:        t, k, K00..K1_11 (row-major 2x12)
void write_verification(std::ostream& os, const VerificationTraces& tr);
void write_nominal(std::ostream& os, const ReferenceTrajectory& ref, const NominalTrajectory& nom);
void write_ticks(std::ostream& os, const RunLog& log);
void write_plans(std::ostream& os, const RunLog& log);
void write_gains(std::ostream& os, const GainSchedule& gs, double dt);

/// Plain `key: value` report of the tracking metrics.
void write_metrics(std::ostream& os, const TrackingMetrics& m, double ff_input_delta_rms,
                   double reference_input_delta_rms);

/// Writes through `fn` to `path`, throwing std::runtime_error when the
/// file cannot be opened.
template <class Fn>
void to_file(const std::string& path, Fn&& fn) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write '" + path + "'");
  fn(os);
  if (!os) throw std::runtime_error("write to '" + path + "' failed");
}

}  // namespace fftrack::csv
