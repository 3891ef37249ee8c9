#include "commands.hpp"

#include <cmath>
#include <filesystem>
#include <iomanip>
#include <iostream>

#include "fftrack/closed_loop.hpp"
#include "fftrack/csv.hpp"
#include "fftrack/model_verification.hpp"
#include "fftrack/scenario.hpp"
#include "fftrack/svg_plot.hpp"

namespace fftrack::cli {

namespace {

namespace fs = std::filesystem;
using namespace state;

struct Context {
  Scenario scenario;
  fs::path out;
};

Context open(const Options& opt) {
  Context ctx{load_scenario(opt.config), {}};
  if (opt.seed) {
    if (!ctx.scenario.plant) ctx.scenario.plant = PlantConfig{};
    ctx.scenario.plant->rng_seed = *opt.seed;
  }
  ctx.out = opt.out ? fs::path(*opt.out) : fs::path(ctx.scenario.output_dir);
  fs::create_directories(ctx.out);
  return ctx;
}

std::string path_in(const Context& ctx, const char* name) { return (ctx.out / name).string(); }

template <class F>
std::vector<double> column(std::size_t n, F&& f) {
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = f(i);
  return out;
}

// First N samples of the scenario reference, N = the feedforward horizon.
ReferenceTrajectory optimization_window(const Scenario& sc) {
  const auto& ref = sc.require_reference();
  const int N = sc.require_feedforward().horizon;
  if (ref.horizon() < N) {
    throw ScenarioError(sc.source + ": reference has " + std::to_string(ref.horizon()) +
                        " steps, fewer than the feedforward horizon " + std::to_string(N));
  }
  return ref.window(0, N);
}

FeedforwardPlan plan_window(const Scenario& sc, const ReferenceTrajectory& window) {
  const auto& ff = sc.require_feedforward();
  const FfWeights w = FfWeights::from_diagonals(ff.q_diag, ff.r_diags, window.horizon());
  return optimize_trajectory(window, augment_reference(window).states.front(), w, ff.constraints,
                             sc.model, {});
}

void report_plan(const FeedforwardPlan& plan) {
  std::cout << std::setprecision(10) << "objective: " << plan.objective << '\n'
            << "variables: " << plan.qp_stats.num_variables << '\n'
            << "inequalities: " << plan.qp_stats.num_inequalities << '\n'
            << "active constraints: " << plan.qp_stats.active_constraints << '\n'
            << "iterations: " << plan.qp_stats.iterations << '\n'
            << "kkt residual: " << plan.qp_stats.kkt.max() << '\n';
}

}  // namespace

int verify_model(const Options& opt) {
  const Context ctx = open(opt);
  const VerificationConfig cfg = ctx.scenario.verify.value_or(VerificationConfig{});
  const VerificationTraces tr = verify_linearization(cfg, ctx.scenario.model);
  csv::to_file(path_in(ctx, "verification.csv"), [&](std::ostream& os) { csv::write_verification(os, tr); });

  const std::size_t n = tr.times.size();
  auto trace = [&](const std::vector<VehicleState>& xs, int idx) {
    return column(n, [&](std::size_t k) { return xs[k][idx]; });
  };
  const auto euler_gap = column(n, [&](std::size_t k) { return VerificationTraces::position_gap(tr.euler[k], tr.oracle[k]); });
  const auto ltv_gap = column(n, [&](std::size_t k) { return VerificationTraces::position_gap(tr.ltv[k], tr.euler[k]); });
  std::vector<svg::Panel> panels = {
      {"Path", "s [m]", "y [m]",
       {{"fine-step oracle", trace(tr.oracle, kS), trace(tr.oracle, kY)},
        {"nonlinear Euler", trace(tr.euler, kS), trace(tr.euler, kY), true},
        {"LTV", trace(tr.ltv, kS), trace(tr.ltv, kY)}}},
      {"Heading", "t [s]", "theta [rad]",
       {{"fine-step oracle", tr.times, trace(tr.oracle, kTheta)},
        {"nonlinear Euler", tr.times, trace(tr.euler, kTheta), true},
        {"LTV", tr.times, trace(tr.ltv, kTheta)}}},
      {"Position gap", "t [s]", "gap [m]",
       {{"Euler vs oracle", tr.times, euler_gap}, {"LTV vs Euler", tr.times, ltv_gap}}},
  };
  csv::to_file(path_in(ctx, "verification.svg"),
               [&](std::ostream& os) { svg::write(os, "Discretized model against a fine-step oracle", panels); });

  std::cout << std::setprecision(6) << "max position gap, Euler vs oracle: "
            << *std::max_element(euler_gap.begin(), euler_gap.end()) << " m\n"
            << "max position gap, LTV vs Euler: " << *std::max_element(ltv_gap.begin(), ltv_gap.end())
            << " m\n"
            << "wrote " << path_in(ctx, "verification.csv") << '\n';
  return 0;
}

int optimize(const Options& opt) {
  const Context ctx = open(opt);
  const ReferenceTrajectory window = optimization_window(ctx.scenario);
  const FeedforwardPlan plan = plan_window(ctx.scenario, window);
  csv::to_file(path_in(ctx, "nominal.csv"), [&](std::ostream& os) { csv::write_nominal(os, window, plan.nominal); });

  const std::size_t n = window.states.size();
  const auto t = column(n, [&](std::size_t k) { return (window.start_index + static_cast<double>(k)) * window.dt; });
  auto ref = [&](int c) { return column(n, [&](std::size_t k) { return window.states[k][c]; }); };
  auto nom = [&](int c) { return column(n, [&](std::size_t k) { return plan.nominal.states[k][c]; }); };
  const auto ref_u = reference_inputs(window, ctx.scenario.model);
  const std::vector<double> tu(t.begin(), t.end() - 1);
  auto inputs = [&](const std::vector<ControlInput>& u, int c) {
    return column(u.size(), [&](std::size_t k) { return u[k][c]; });
  };
  std::vector<svg::Panel> panels = {
      {"Path", "s [m]", "y [m]", {{"reference", ref(0), ref(1), true}, {"nominal", nom(kS), nom(kY)}}},
      {"Heading", "t [s]", "theta [rad]", {{"reference", t, ref(2), true}, {"nominal", t, nom(kTheta)}}},
      {"Speed", "t [s]", "v [m/s]", {{"reference", t, ref(3), true}, {"nominal", t, nom(kV)}}},
      {"Steering command", "t [s]", "delta_in [rad]",
       {{"reference-derived", tu, inputs(ref_u, 0), true}, {"optimized", tu, inputs(plan.nominal.inputs, 0)}}},
      {"Acceleration command", "t [s]", "alpha_in [m/s^2]",
       {{"reference-derived", tu, inputs(ref_u, 1), true}, {"optimized", tu, inputs(plan.nominal.inputs, 1)}}},
  };
  csv::to_file(path_in(ctx, "nominal.svg"),
               [&](std::ostream& os) { svg::write(os, "Reference and optimized nominal trajectory", panels); });
  report_plan(plan);
  std::cout << "wrote " << path_in(ctx, "nominal.csv") << '\n';
  return 0;
}

int gains(const Options& opt) {
  const Context ctx = open(opt);
  const ReferenceTrajectory window = optimization_window(ctx.scenario);
  const FeedforwardPlan plan = plan_window(ctx.scenario, window);
  const auto& fb = ctx.scenario.require_feedback();
  const GainSchedule gs = schedule_for(plan.nominal, ctx.scenario.model, fb.integrator_C, fb.weights);
  csv::to_file(path_in(ctx, "gains.csv"), [&](std::ostream& os) { csv::write_gains(os, gs, window.dt); });
  std::cout << "gain steps: " << gs.horizon() << '\n'
            << "wrote " << path_in(ctx, "gains.csv") << '\n';
  return 0;
}

int simulate(const Options& opt) {
  const Context ctx = open(opt);
  RunConfig cfg = ctx.scenario.run_config();
  if (opt.mode) {
    if (*opt.mode == "single-shot") {
      cfg.mode = PlanningMode::kSingleShot;
    } else if (*opt.mode == "receding") {
      cfg.mode = PlanningMode::kReceding;
    } else {
      throw std::invalid_argument("--mode must be 'single-shot' or 'receding'");
    }
  }
  const RunLog log = run(cfg);
  const TrackingMetrics m = compute_metrics(log);
  const int tps = cfg.ticks_per_sample();
  const auto ff = feedforward_trace(log, tps);
  const ReferenceTrajectory used = cfg.reference.window(0, static_cast<int>(ff.size()));
  const auto ref_u = reference_inputs(used, cfg.model);
  const double ff_rms = rms_delta(ff), ref_rms = rms_delta(ref_u);

  csv::to_file(path_in(ctx, "ticks.csv"), [&](std::ostream& os) { csv::write_ticks(os, log); });
  csv::to_file(path_in(ctx, "plans.csv"), [&](std::ostream& os) { csv::write_plans(os, log); });
  csv::to_file(path_in(ctx, "metrics.txt"), [&](std::ostream& os) { csv::write_metrics(os, m, ff_rms, ref_rms); });
  csv::to_file(path_in(ctx, "feedforward.csv"), [&](std::ostream& os) {
    os << "t,ff_delta,ff_alpha,ref_delta,ref_alpha\n" << std::setprecision(12);
    for (std::size_t k = 0; k < ff.size(); ++k) {
      os << k * cfg.ff_period << ',' << ff[k][0] << ',' << ff[k][1] << ',' << ref_u[k][0] << ','
         << ref_u[k][1] << '\n';
    }
  });

  const std::size_t n = log.ticks.size();
  const auto t = column(n, [&](std::size_t i) { return log.ticks[i].time; });
  const auto tf = column(ff.size(), [&](std::size_t k) { return k * cfg.ff_period; });
  auto tick = [&](auto&& f) { return column(n, [&](std::size_t i) { return f(log.ticks[i]); }); };
  auto seq = [&](const std::vector<ControlInput>& u, int c) {
    return column(u.size(), [&](std::size_t k) { return u[k][c]; });
  };
  std::vector<svg::Panel> inputs = {
      {"Steering command", "t [s]", "delta_in [rad]",
       {{"reference-derived", tf, seq(ref_u, 0), true},
        {"feedforward", tf, seq(ff, 0)},
        {"feedforward + feedback", t, tick([](const TickRecord& r) { return r.u[0]; })}}},
      {"Acceleration command", "t [s]", "alpha_in [m/s^2]",
       {{"reference-derived", tf, seq(ref_u, 1), true},
        {"feedforward", tf, seq(ff, 1)},
        {"feedforward + feedback", t, tick([](const TickRecord& r) { return r.u[1]; })}}},
  };
  csv::to_file(path_in(ctx, "inputs.svg"), [&](std::ostream& os) { svg::write(os, "Control inputs", inputs); });

  std::vector<svg::Panel> errors;
  const char* names[4] = {"s", "y", "theta", "v"};
  const char* units[4] = {"[m]", "[m]", "[rad]", "[m/s]"};
  const int idx[4] = {kS, kY, kTheta, kV};
  for (int c = 0; c < 4; ++c) {
    const int i = idx[c];
    errors.push_back({std::string("Tracking error in ") + names[c], "t [s]",
                      std::string(names[c]) + " error " + units[c],
                      {{"true - nominal", t, tick([i](const TickRecord& r) { return r.true_state[i] - r.x_hat[i]; })}}});
  }
  csv::to_file(path_in(ctx, "errors.svg"), [&](std::ostream& os) { svg::write(os, "Tracking error against the nominal trajectory", errors); });

  std::cout << std::setprecision(6) << "ticks: " << n << ", plans: " << log.plans.size() << '\n'
            << "max |error| s y theta v: " << m.max_abs.transpose() << '\n'
            << "rms error   s y theta v: " << m.rms.transpose() << '\n'
            << "rms |du| feedforward: " << ff_rms << ", reference-derived: " << ref_rms << '\n'
            << "wrote " << ctx.out.string() << '\n';
  return 0;
}

int dump_qp(const Options& opt) {
  const Context ctx = open(opt);
  const ReferenceTrajectory window = optimization_window(ctx.scenario);
  const auto& ff = ctx.scenario.require_feedforward();
  const FfWeights w = FfWeights::from_diagonals(ff.q_diag, ff.r_diags, window.horizon());
  const AssembledProblem prob = assemble_problem(window, augment_reference(window).states.front(), w,
                                                 ff.constraints, ctx.scenario.model, {});
  csv::to_file(path_in(ctx, "qp.txt"), [&](std::ostream& os) { fftrack::dump_qp(os, prob.qp); });
  std::cout << "variables: " << prob.qp.num_variables() << ", inequalities: "
            << prob.qp.num_inequalities() << '\n'
            << "wrote " << path_in(ctx, "qp.txt") << '\n';
  return 0;
}

}  // namespace fftrack::cli
