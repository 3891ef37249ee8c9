#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"

int main(int argc, char** argv) {
  using fftrack::cli::Options;
  CLI::App app{"Feedforward trajectory optimization with time-varying LQR tracking"};
  app.require_subcommand(1);

  Options opt;
  std::uint64_t seed = 0;
  std::string out, mode;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config, "Scenario file (YAML)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out, "Output directory (overrides the scenario)");
  };

  auto* verify = app.add_subcommand("verify-model", "Compare the discretized models against a fine-step oracle");
  auto* optimize = app.add_subcommand("optimize", "Optimize the feedforward trajectory over one horizon");
  auto* gains = app.add_subcommand("gains", "Write the feedback gain schedule for the optimized trajectory");
  auto* simulate = app.add_subcommand("simulate", "Run the closed loop on the simulated vehicle");
  auto* dump = app.add_subcommand("dump-qp", "Write the assembled quadratic program as text");
  for (auto* sub : {verify, optimize, gains, simulate, dump}) common(sub);
  simulate->add_option("--seed", seed, "Plant noise seed (overrides the scenario)");
  simulate->add_option("--mode", mode, "Planning mode")->check(CLI::IsMember({"single-shot", "receding"}));

  CLI11_PARSE(app, argc, argv);
  if (simulate->count("--seed")) opt.seed = seed;
  if (simulate->count("--mode")) opt.mode = mode;
  if (!out.empty()) opt.out = out;

  try {
    if (*verify) return fftrack::cli::verify_model(opt);
    if (*optimize) return fftrack::cli::optimize(opt);
    if (*gains) return fftrack::cli::gains(opt);
    if (*simulate) return fftrack::cli::simulate(opt);
    if (*dump) return fftrack::cli::dump_qp(opt);
  } catch (const std::exception& e) {
    std::cerr << "fftrack: error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
