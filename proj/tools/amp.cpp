// amp: batch front-end for the aerial-manipulator planning pipeline.
//
//   amp <plan|parametrize|simulate|compensate|evaluate|all> --scenario FILE [--out DIR]
//       [--seed-planner N] [--seed-disturbance N] [--no-compensation]
//   amp compare BASELINE_DIR CANDIDATE_DIR [--out DIR]

#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "amp/pipeline.hpp"

namespace {

struct StageArgs {
  std::string scenario;
  std::string out;
  std::optional<std::uint64_t> seed_planner;
  std::optional<std::uint64_t> seed_disturbance;
  bool no_compensation = false;
};

void add_stage_options(CLI::App* cmd, StageArgs& args) {
  cmd->add_option("--scenario", args.scenario, "Scenario JSON file")->required();
  cmd->add_option("--out", args.out, "Output directory (defaults to the scenario's output_directory)");
  cmd->add_option("--seed-planner", args.seed_planner, "Override the planner seed");
  cmd->add_option("--seed-disturbance", args.seed_disturbance, "Override the disturbance seed");
  cmd->add_flag("--no-compensation", args.no_compensation, "Skip compensation (baseline run)");
}

int run_stages(const StageArgs& args, const std::string& command) {
  std::string current = "scenario";
  try {
    amp::Scenario sc = amp::load_scenario(args.scenario);
    for (const auto& w : sc.warnings) std::cerr << "warning: " << w << '\n';
    if (args.seed_planner) sc.planner_seed = *args.seed_planner;
    if (args.seed_disturbance) sc.disturbance_seed = *args.seed_disturbance;
    const std::string out = args.out.empty() ? sc.output_directory : args.out;
    if (out.empty()) throw amp::ScenarioError("no output directory: pass --out or set output_directory");

    amp::Pipeline pipeline(std::move(sc), {out, !args.no_compensation});
    if (command == "all") {
      std::filesystem::create_directories(out);
      std::filesystem::remove(std::filesystem::path(out) / amp::artifact::report);
    }
    for (amp::Stage s : amp::kAllStages) {
      if (command != "all" && command != amp::stage_name(s)) continue;
      current = amp::stage_name(s);
      pipeline.run(s);
      std::cerr << current << ": ok\n";
    }
    return amp::kExitOk;
  } catch (const std::exception& e) {
    std::cerr << "error in stage " << current << ": " << e.what() << '\n';
    return amp::exit_code_for(e);
  }
}

int run_compare(const std::string& a, const std::string& b, const std::string& out) {
  try {
    const auto cmp = amp::compare_runs(a, b);
    const std::string summary = cmp.summary.dump(2) + "\n";
    if (out.empty()) {
      std::cout << summary;
    } else {
      std::filesystem::create_directories(out);
      amp::write_csv((std::filesystem::path(out) / "comparison.csv").string(), cmp.deltas);
      std::ofstream((std::filesystem::path(out) / "comparison.json"), std::ios::binary) << summary;
    }
    return amp::kExitOk;
  } catch (const std::exception& e) {
    std::cerr << "error in compare: " << e.what() << '\n';
    return amp::kExitOther;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Aerial-manipulator trajectory planning pipeline"};
  app.require_subcommand(1);

  StageArgs args;
  for (const char* name : {"plan", "parametrize", "simulate", "compensate", "evaluate", "all"}) {
    auto* cmd = app.add_subcommand(name, std::string("Run ") +
                                             (std::string(name) == "all" ? "every stage" : "the " + std::string(name) + " stage"));
    add_stage_options(cmd, args);
  }
  std::string base, cand, cmp_out;
  auto* compare = app.add_subcommand("compare", "Compare the error traces of two runs");
  compare->add_option("baseline", base, "Baseline run directory")->required();
  compare->add_option("candidate", cand, "Candidate run directory")->required();
  compare->add_option("--out", cmp_out, "Write comparison.csv and comparison.json here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? amp::kExitOk : amp::kExitOther;
  }

  if (compare->parsed()) return run_compare(base, cand, cmp_out);
  for (auto* sub : app.get_subcommands()) return run_stages(args, sub->get_name());
  return amp::kExitOther;
}
