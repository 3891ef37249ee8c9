#include "fftrack/closed_loop.hpp"

#include <chrono>
#include <cmath>
#include <cstring>
#include <future>
#include <memory>

namespace fftrack {

namespace {

int ratio_of(double num, double den, const char* what) {
  const double r = num / den;
  const long k = std::lround(r);
  if (k < 1 || std::abs(r - static_cast<double>(k)) > 1e-9 * std::max(1.0, r)) {
    throw std::invalid_argument(std::string("RunConfig: ") + what);
  }
  return static_cast<int>(k);
}

template <class M>
bool bits_equal(const M& a, const M& b) {
  return std::memcmp(a.data(), b.data(), sizeof(double) * a.size()) == 0;
}

bool bits_equal(double a, double b) { return std::memcmp(&a, &b, sizeof(double)) == 0; }

struct ActivePlan {
  FeedforwardPlan ff;
  GainSchedule gains;
  double solve_ms = 0.0;
};

// Inputs for one trajectory optimization, captured by value so it can run on
// a worker thread.
struct PlanRequest {
  ReferenceTrajectory window;
  VehicleState x0;
  InputHistory history;
};

}  // namespace

int RunConfig::ticks_per_sample() const {
  return ratio_of(ff_period, fb_period, "fb_period must divide ff_period");
}

int RunConfig::ticks_per_plan() const {
  return ratio_of(planner_period, fb_period, "fb_period must divide planner_period");
}

int RunConfig::total_ticks() const {
  return ratio_of(total_duration, fb_period, "fb_period must divide total_duration");
}

void RunConfig::validate() const {
  model.validate();
  plant.validate();
  constraints.validate();
  tvlqr.validate();
  if (!(fb_period > 0.0 && ff_period > 0.0 && planner_period > 0.0 && total_duration > 0.0)) {
    throw std::invalid_argument("RunConfig: periods and duration must be positive");
  }
  if (std::abs(ff_period - model.dt) > 1e-12) {
    throw std::invalid_argument("RunConfig: ff_period must equal the model sample interval");
  }
  ticks_per_sample();
  ticks_per_plan();
  ratio_of(planner_period, ff_period, "ff_period must divide planner_period");
  const int samples = ratio_of(total_duration, ff_period, "ff_period must divide total_duration");
  reference.validate();
  if (std::abs(reference.dt - model.dt) > 1e-12) {
    throw std::invalid_argument("RunConfig: reference spacing must equal the model sample interval");
  }
  if (reference.horizon() < samples) {
    throw std::invalid_argument("RunConfig: reference is shorter than the run");
  }
  if (mode == PlanningMode::kReceding && horizon < 1) {
    throw std::invalid_argument("RunConfig: horizon must be positive");
  }
  if (plant_kind == PlantKind::kIdealLtv && ticks_per_sample() != 1) {
    throw std::invalid_argument("RunConfig: the ideal LTV plant requires fb_period == ff_period");
  }
  if (ff_r_diags.empty()) throw std::invalid_argument("RunConfig: R_0 is required");
}

bool RunLog::same_trajectory(const RunLog& other) const {
  if (ticks.size() != other.ticks.size() || plans.size() != other.plans.size()) return false;
  for (std::size_t i = 0; i < ticks.size(); ++i) {
    const auto& a = ticks[i];
    const auto& b = other.ticks[i];
    if (!bits_equal(a.time, b.time) || !bits_equal(a.true_state, b.true_state) ||
        !bits_equal(a.measured, b.measured) || !bits_equal(a.x_hat, b.x_hat) ||
        !bits_equal(a.z_tilde, b.z_tilde) || !bits_equal(a.u_ff, b.u_ff) ||
        !bits_equal(a.u_fb, b.u_fb) || !bits_equal(a.u, b.u) || a.saturated != b.saturated ||
        a.plan_index != b.plan_index) {
      return false;
    }
  }
  for (std::size_t i = 0; i < plans.size(); ++i) {
    const auto& a = plans[i];
    const auto& b = other.plans[i];
    if (!bits_equal(a.time, b.time) || a.horizon != b.horizon ||
        !bits_equal(a.objective, b.objective) || a.iterations != b.iterations ||
        a.active_constraints != b.active_constraints || !bits_equal(a.kkt_max, b.kkt_max)) {
      return false;
    }
  }
  return true;
}

GainSchedule schedule_for(const NominalTrajectory& nominal, const ModelParams& p,
                          const StateMatrix& C, const TvlqrWeights& w) {
  const InputMatrix B = input_matrix(p);
  std::vector<AugMatrix> A_seq;
  A_seq.reserve(nominal.horizon());
  AugInputMatrix B_aug = AugInputMatrix::Zero();
  for (int k = 0; k < nominal.horizon(); ++k) {
    const AugmentedDynamics aug = augment_dynamics(error_jacobian(nominal.states[k], p), B, C);
    A_seq.push_back(aug.A);
    B_aug = aug.B;
  }
  return riccati_gains(A_seq, B_aug, w);
}

RunLog run(const RunConfig& cfg) {
  cfg.validate();
  const int tps = cfg.ticks_per_sample();
  const int tpp = cfg.ticks_per_plan();
  const int total = cfg.total_ticks();
  const int samples_per_plan = tpp / tps;
  const int run_samples = total / tps;
  const bool receding = cfg.mode == PlanningMode::kReceding;
  const bool concurrent = receding && cfg.concurrent;
  const double integrator_scale = cfg.fb_period / cfg.ff_period;

  const int N_ff = receding ? cfg.horizon : run_samples;
  const FfWeights weights_full = FfWeights::from_diagonals(cfg.ff_q_diag, cfg.ff_r_diags, N_ff);
  const AugmentedReference tau_hat_global = augment_reference(cfg.reference);
  const ModelParams plant_params = cfg.model.with_dt(cfg.fb_period);

  auto weights_for = [&](int N) {
    return N == N_ff ? weights_full : FfWeights::from_diagonals(cfg.ff_q_diag, cfg.ff_r_diags, N);
  };
  auto request_at = [&](int tick, const VehicleState& x0, const InputHistory& hist) {
    const int first = tick / tps;
    const int available = cfg.reference.horizon() - first;
    const int N = receding ? std::min(cfg.horizon, available) : run_samples;
    return PlanRequest{cfg.reference.window(first, N), x0, hist};
  };
  auto solve_request = [&cfg, weights_for](const PlanRequest& req) {
    const auto t0 = std::chrono::steady_clock::now();
    auto plan = std::make_shared<ActivePlan>();
    plan->ff = optimize_trajectory(req.window, req.x0, weights_for(req.window.horizon()),
                                   cfg.constraints, cfg.model, req.history);
    if (cfg.feedback_enabled) {
      plan->gains = schedule_for(plan->ff.nominal, cfg.model, cfg.integrator_C, cfg.tvlqr);
    } else {
      plan->gains.gains.assign(plan->ff.nominal.horizon(), GainMatrix::Zero());
    }
    plan->solve_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return std::shared_ptr<const ActivePlan>(std::move(plan));
  };

  Plant plant(plant_params, cfg.plant);
  const InputMatrix B = input_matrix(cfg.model);

  RunLog log;
  log.ticks.reserve(total);
  SnapshotSlot<ActivePlan> slot;
  std::future<std::shared_ptr<const ActivePlan>> pending;

  VehicleState x = cfg.initial_state.value_or(tau_hat_global.states.front());
  VehicleState measured =
      cfg.plant_kind == PlantKind::kNonlinear ? plant.measure(x) : x;
  InputHistory history;
  VehicleState integrator = VehicleState::Zero();
  int plan_start = 0;
  int plan_index = -1;

  for (int i = 0; i < total; ++i) {
    const double t = i * cfg.fb_period;
    const bool plan_tick = receding ? (i % tpp == 0) : (i == 0);
    if (plan_tick) {
      try {
        if (pending.valid()) {
          slot.publish(pending.get());
        } else {
          slot.publish(solve_request(request_at(i, i == 0 ? x : measured, history)));
        }
      } catch (const QpError& e) {
        throw RunError(t, e.status(),
                       "trajectory optimization failed at t=" + std::to_string(t) + ": " + e.what());
      }
      ++plan_index;
      plan_start = i;
      integrator.setZero();
      const auto active = slot.current();
      log.plans.push_back({t, active->ff.nominal.horizon(), active->ff.objective,
                           active->ff.qp_stats.iterations, active->ff.qp_stats.active_constraints,
                           active->ff.qp_stats.kkt.max(), active->solve_ms});

      const int next = i + tpp;
      if (concurrent && next < total) {
        // Predict the state at the next publication from this nominal and
        // queue the feedforward inputs that will have been consumed by then.
        InputHistory hist = history;
        for (int k = 0; k < samples_per_plan && k < active->ff.nominal.horizon(); ++k) {
          hist.inputs.insert(hist.inputs.begin(), active->ff.nominal.inputs[k]);
        }
        const int ahead = std::min(samples_per_plan, active->ff.nominal.horizon());
        PlanRequest req = request_at(next, active->ff.nominal.states[ahead], std::move(hist));
        pending = std::async(std::launch::async, solve_request, std::move(req));
      }
    }

    const auto active = slot.current();
    const NominalTrajectory& nominal = active->ff.nominal;
    const int offset = i - plan_start;
    const int k = offset / tps;
    const int phase = offset % tps;

    VehicleState x_hat = nominal.states[k];
    if (cfg.interpolate_nominal && phase != 0) {
      const double a = static_cast<double>(phase) / tps;
      x_hat = (1.0 - a) * nominal.states[k] + a * nominal.states[k + 1];
    }
    const ControlInput u_ff = nominal.inputs[k];
    if (phase == 0) history.inputs.insert(history.inputs.begin(), u_ff);

    ErrorState err;
    err.x_tilde = measured - x_hat;
    err.v_tilde = integrator;
    const AugState z = err.stacked();
    const ControlInput u_fb = feedback(active->gains.gains[k], z);
    const ControlInput u = u_ff + u_fb;

    TickRecord rec;
    rec.time = t;
    rec.true_state = x;
    rec.measured = measured;
    rec.x_hat = x_hat;
    rec.z_tilde = z;
    rec.u_ff = u_ff;
    rec.u_fb = u_fb;
    rec.u = u;
    rec.plan_index = plan_index;

    if (cfg.plant_kind == PlantKind::kNonlinear) {
      const PlantStep step = plant.step(x, u);
      rec.saturated = step.saturated;
      x = step.next;
      measured = step.measured;
    } else {
      const int global_sample = i / tps;
      const StateMatrix A = linearize(tau_hat_global.states[global_sample], cfg.model).A;
      x = A * x + B * u;
      measured = x;
    }
    integrator += integrator_scale * (cfg.integrator_C * err.x_tilde);
    log.ticks.push_back(rec);
  }
  if (pending.valid()) pending.wait();
  return log;
}

TrackingMetrics compute_metrics(const RunLog& log) {
  if (log.ticks.empty()) throw std::invalid_argument("compute_metrics: empty log");
  static constexpr int kChannels[4] = {state::kS, state::kY, state::kTheta, state::kV};
  TrackingMetrics m;
  Eigen::Vector4d sumsq = Eigen::Vector4d::Zero();
  for (const auto& rec : log.ticks) {
    for (int c = 0; c < 4; ++c) {
      const double e = rec.true_state[kChannels[c]] - rec.x_hat[kChannels[c]];
      m.max_abs[c] = std::max(m.max_abs[c], std::abs(e));
      sumsq[c] += e * e;
    }
  }
  m.rms = (sumsq / static_cast<double>(log.ticks.size())).cwiseSqrt();

  std::vector<ControlInput> inputs;
  inputs.reserve(log.ticks.size());
  for (const auto& rec : log.ticks) inputs.push_back(rec.u);
  m.input_delta_rms = rms_delta(inputs);
  return m;
}

double rms_delta(const std::vector<ControlInput>& inputs) {
  if (inputs.size() < 2) return 0.0;
  double sum = 0.0;
  for (std::size_t k = 1; k < inputs.size(); ++k) sum += (inputs[k] - inputs[k - 1]).squaredNorm();
  return std::sqrt(sum / static_cast<double>(inputs.size() - 1));
}

std::vector<ControlInput> feedforward_trace(const RunLog& log, int ticks_per_sample) {
  std::vector<ControlInput> out;
  for (std::size_t i = 0; i < log.ticks.size(); i += ticks_per_sample) out.push_back(log.ticks[i].u_ff);
  return out;
}

}  // namespace fftrack
