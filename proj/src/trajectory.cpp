#include "fftrack/trajectory.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace fftrack {

ReferenceTrajectory ReferenceTrajectory::from_rows(const std::vector<std::vector<double>>& rows,
                                                   double dt, int start_index) {
  ReferenceTrajectory ref;
  ref.dt = dt;
  ref.start_index = start_index;
  ref.states.reserve(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k].size() != 4) {
      throw std::invalid_argument("reference row " + std::to_string(k) + " has " +
                                  std::to_string(rows[k].size()) +
                                  " entries, expected [s, y, theta, v]");
    }
    ref.states.emplace_back(rows[k][0], rows[k][1], rows[k][2], rows[k][3]);
  }
  ref.validate();
  return ref;
}

ReferenceTrajectory ReferenceTrajectory::window(int first, int count) const {
  if (first < 0 || count < 1 || first + count >= static_cast<int>(states.size())) {
    throw std::out_of_range("reference window exceeds the available samples");
  }
  ReferenceTrajectory w;
  w.dt = dt;
  w.start_index = start_index + first;
  w.states.assign(states.begin() + first, states.begin() + first + count + 1);
  return w;
}

void ReferenceTrajectory::validate() const {
  if (states.size() < 2) throw std::invalid_argument("reference needs at least two samples");
  if (!(dt > 0.0)) throw std::invalid_argument("reference spacing must be positive");
  for (const auto& s : states) {
    if (!s.allFinite()) throw std::invalid_argument("reference contains non-finite values");
  }
}

Eigen::VectorXd AugmentedReference::stacked() const {
  Eigen::VectorXd out(kStateDim * states.size());
  for (std::size_t k = 0; k < states.size(); ++k) {
    out.segment<kStateDim>(kStateDim * k) = states[k];
  }
  return out;
}

AugmentedReference augment_reference(const ReferenceTrajectory& ref) {
  ref.validate();
  AugmentedReference aug;
  aug.states.reserve(ref.states.size());
  for (const auto& mu : ref.states) {
    VehicleState x = VehicleState::Zero();
    x[state::kS] = mu[0];
    x[state::kY] = mu[1];
    x[state::kTheta] = mu[2];
    x[state::kV] = mu[3];
    aug.states.push_back(x);
  }
  return aug;
}

std::vector<PlannerState> project_to_planner(const AugmentedReference& aug) {
  std::vector<PlannerState> out;
  out.reserve(aug.states.size());
  for (const auto& x : aug.states) {
    out.emplace_back(x[state::kS], x[state::kY], x[state::kTheta], x[state::kV]);
  }
  return out;
}

ReferenceTrajectory generate_piecewise_reference(const std::vector<Segment>& segments,
                                                 const ModelParams& p, Pose start) {
  p.validate();
  if (segments.empty()) throw std::invalid_argument("at least one segment is required");

  ReferenceTrajectory ref;
  ref.dt = p.dt;
  double s = start.s, y = start.y, theta = start.theta;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const Segment& seg = segments[i];
    const double ratio = seg.duration / p.dt;
    const long steps = std::lround(ratio);
    if (steps < 1 || std::abs(ratio - static_cast<double>(steps)) > 1e-9 * std::max(1.0, ratio)) {
      throw std::invalid_argument("segment " + std::to_string(i) +
                                  " duration is not a positive multiple of dt");
    }
    const double v = seg.speed;
    const double curvature = std::tan(seg.steering) / p.wheelbase;
    const double omega = v * curvature;
    for (long k = 0; k < steps; ++k) {
      ref.states.emplace_back(s, y, theta, v);
      const double theta_next = theta + omega * p.dt;
      if (std::abs(omega) < 1e-12) {
        s += v * std::cos(theta) * p.dt;
        y += v * std::sin(theta) * p.dt;
      } else {
        s += v / omega * (std::sin(theta_next) - std::sin(theta));
        y += v / omega * (std::cos(theta) - std::cos(theta_next));
      }
      theta = theta_next;
    }
  }
  ref.states.emplace_back(s, y, theta, segments.back().speed);
  return ref;
}

std::vector<ControlInput> reference_inputs(const ReferenceTrajectory& ref, const ModelParams& p) {
  ref.validate();
  std::vector<ControlInput> out;
  out.reserve(ref.states.size() - 1);
  for (std::size_t k = 0; k + 1 < ref.states.size(); ++k) {
    const PlannerState& a = ref.states[k];
    const PlannerState& b = ref.states[k + 1];
    ControlInput u;
    const double v = a[3];
    u[input::kDeltaIn] = std::abs(v) > 1e-9 ? p.wheelbase * (b[2] - a[2]) / (v * ref.dt) : 0.0;
    u[input::kAlphaIn] = (b[3] - a[3]) / ref.dt;
    out.push_back(u);
  }
  return out;
}

void write_reference_csv(std::ostream& os, const ReferenceTrajectory& ref) {
  os << "t,s,y,theta,v\n" << std::setprecision(12);
  for (std::size_t k = 0; k < ref.states.size(); ++k) {
    const auto& m = ref.states[k];
    os << (ref.start_index + static_cast<double>(k)) * ref.dt << ',' << m[0] << ',' << m[1]
       << ',' << m[2] << ',' << m[3] << '\n';
  }
}

ReferenceTrajectory read_reference_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw std::invalid_argument("reference CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "t,s,y,theta,v") {
    throw std::invalid_argument("reference CSV header must be 't,s,y,theta,v'");
  }
  std::vector<double> times;
  std::vector<std::vector<double>> rows;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> values;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        values.push_back(std::stod(cell, &used));
      } catch (const std::exception&) {
        throw std::invalid_argument("reference CSV line " + std::to_string(lineno) +
                                    ": cannot parse '" + cell + "'");
      }
    }
    if (values.size() != 5) {
      throw std::invalid_argument("reference CSV line " + std::to_string(lineno) +
                                  ": expected 5 columns");
    }
    times.push_back(values[0]);
    rows.emplace_back(values.begin() + 1, values.end());
  }
  if (times.size() < 2) throw std::invalid_argument("reference CSV needs at least two rows");
  const double dt = times[1] - times[0];
  if (!(dt > 0.0)) throw std::invalid_argument("reference CSV times must increase");
  for (std::size_t k = 1; k < times.size(); ++k) {
    if (std::abs(times[k] - times[k - 1] - dt) > 1e-6 * std::max(1.0, dt)) {
      throw std::invalid_argument("reference CSV times are not uniformly spaced");
    }
  }
  return ReferenceTrajectory::from_rows(rows, dt, static_cast<int>(std::lround(times[0] / dt)));
}

ReferenceTrajectory read_reference_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open reference CSV '" + path + "'");
  return read_reference_csv(in);
}

}  // namespace fftrack
