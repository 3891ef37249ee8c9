#include "fftrack/csv.hpp"

#include <iomanip>
#include <ostream>

namespace fftrack::csv {

namespace {

constexpr const char* kStateNames[kStateDim] = {"s", "y", "theta", "delta", "v", "alpha"};

void state_header(std::ostream& os, const std::string& prefix) {
  for (const char* n : kStateNames) os << ',' << prefix << n;
}

template <class V>
void values(std::ostream& os, const V& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) os << ',' << v[i];
}

}  // namespace

void write_verification(std::ostream& os, const VerificationTraces& tr) {
  os << "t";
  state_header(os, "oracle_");
  state_header(os, "euler_");
  state_header(os, "ltv_");
  os << ",delta_in,alpha_in\n" << std::setprecision(12);
  for (std::size_t k = 0; k < tr.times.size(); ++k) {
    os << tr.times[k];
    values(os, tr.oracle[k]);
    values(os, tr.euler[k]);
    values(os, tr.ltv[k]);
    if (k < tr.inputs.size()) {
      values(os, tr.inputs[k]);
    } else {
      os << ",,";
    }
    os << '\n';
  }
}

void write_nominal(std::ostream& os, const ReferenceTrajectory& ref, const NominalTrajectory& nom) {
  os << "t,ref_s,ref_y,ref_theta,ref_v";
  state_header(os, "");
  os << ",delta_in,alpha_in\n" << std::setprecision(12);
  for (std::size_t k = 0; k < nom.states.size(); ++k) {
    os << (ref.start_index + static_cast<double>(k)) * ref.dt;
    values(os, ref.states[k]);
    values(os, nom.states[k]);
    if (k < nom.inputs.size()) {
      values(os, nom.inputs[k]);
    } else {
      os << ",,";
    }
    os << '\n';
  }
}

void write_ticks(std::ostream& os, const RunLog& log) {
  os << "t,plan";
  state_header(os, "true_");
  state_header(os, "meas_");
  state_header(os, "nom_");
  os << ",ff_delta,ff_alpha,fb_delta,fb_alpha,u_delta,u_alpha,saturated\n" << std::setprecision(12);
  for (const auto& t : log.ticks) {
    os << t.time << ',' << t.plan_index;
    values(os, t.true_state);
    values(os, t.measured);
    values(os, t.x_hat);
    values(os, t.u_ff);
    values(os, t.u_fb);
    values(os, t.u);
    os << ',' << (t.saturated ? 1 : 0) << '\n';
  }
}

void write_plans(std::ostream& os, const RunLog& log) {
  os << "t,horizon,objective,iterations,active,kkt_max\n" << std::setprecision(12);
  for (const auto& p : log.plans) {
    os << p.time << ',' << p.horizon << ',' << p.objective << ',' << p.iterations << ','
       << p.active_constraints << ',' << p.kkt_max << '\n';
  }
}

void write_gains(std::ostream& os, const GainSchedule& gs, double dt) {
  os << "t,k";
  for (int i = 0; i < kInputDim; ++i)
    for (int j = 0; j < kAugDim; ++j) os << ",K" << i << '_' << j;
  os << '\n' << std::setprecision(12);
  for (int k = 0; k < gs.horizon(); ++k) {
    os << k * dt << ',' << k;
    for (int i = 0; i < kInputDim; ++i)
      for (int j = 0; j < kAugDim; ++j) os << ',' << gs.gains[k](i, j);
    os << '\n';
  }
}

void write_metrics(std::ostream& os, const TrackingMetrics& m, double ff_input_delta_rms,
                   double reference_input_delta_rms) {
  static constexpr const char* kChannels[4] = {"s", "y", "theta", "v"};
  os << std::setprecision(12);
  for (int c = 0; c < 4; ++c) {
    os << "max_abs_error_" << kChannels[c] << ": " << m.max_abs[c] << '\n';
    os << "rms_error_" << kChannels[c] << ": " << m.rms[c] << '\n';
  }
  os << "input_delta_rms: " << m.input_delta_rms << '\n';
  os << "feedforward_delta_rms: " << ff_input_delta_rms << '\n';
  os << "reference_input_delta_rms: " << reference_input_delta_rms << '\n';
}

}  // namespace fftrack::csv
