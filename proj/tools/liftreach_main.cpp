#include "liftreach/pipeline.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

using namespace liftreach;

namespace {

Scenario load_scenario(const std::string& path) {
  // bundled names are accepted in place of a file path
  if (!std::filesystem::exists(path)) {
    try {
      return bundled_scenario(path);
    } catch (const NotFoundError&) {
      throw std::invalid_argument("scenario '" + path + "' is neither a file nor a bundled name");
    }
  }
  return Scenario::load(path);
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const NumericalError*>(&e)) return kExitNumerical;
  if (dynamic_cast<const InvalidTargetError*>(&e)) return kExitValidation;
  if (dynamic_cast<const NotFoundError*>(&e)) return kExitValidation;
  if (dynamic_cast<const std::invalid_argument*>(&e)) return kExitValidation;
  if (dynamic_cast<const std::out_of_range*>(&e)) return kExitValidation;
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conservative HJ reachability via lifted linear games"};
  app.require_subcommand(1);

  std::string scenario_path, outdir = "out";
  bool force = false, strict = false;
  std::optional<uint64_t> seed_override;
  int threads = 1;
  app.add_option("--scenario", scenario_path, "scenario file or bundled name")->required();
  app.add_option("--out", outdir, "output directory");
  app.add_flag("--force", force, "overwrite an existing run");
  app.add_flag("--strict", strict, "nonzero exit on violations or ablations");
  app.add_option("--seed", seed_override, "override the scenario seed");
  app.add_option("--threads", threads, "worker threads for grid solves");

  auto* cmd_pipeline = app.add_subcommand("pipeline", "run the full chain");
  auto* cmd_fit = app.add_subcommand("fit", "fit the model(s)");
  auto* cmd_tube = app.add_subcommand("tube", "backward feasible tube");
  auto* cmd_errbound = app.add_subcommand("errbound", "error bound delta*");
  auto* cmd_solve = app.add_subcommand("solve", "Hopf value grids");
  auto* cmd_dp = app.add_subcommand("dp", "DP oracle value grids");
  auto* cmd_compare = app.add_subcommand("compare", "containment report");
  auto* cmd_rollout = app.add_subcommand("rollout", "closed-loop guarantee audit");
  auto* cmd_contours = app.add_subcommand("contours", "zero-level contours of a grid file");

  std::string grid_file, contour_out = "contours.csv";
  double contour_level = 0.0;
  cmd_contours->add_option("--grid", grid_file, "ValueGrid binary file")->required();
  cmd_contours->add_option("--level", contour_level, "level set value");
  cmd_contours->add_option("--output", contour_out, "output CSV path");

  std::string solve_points;
  cmd_solve->add_option("--points", solve_points,
                        "CSV of augmented points to solve instead of the scenario grid");

  CLI11_PARSE(app, argc, argv);

  try {
    Scenario scn = load_scenario(scenario_path);
    if (seed_override) scn.seed = *seed_override;
    std::filesystem::create_directories(outdir);

    if (cmd_pipeline->parsed()) {
      PipelineOptions opts;
      opts.force = force;
      opts.strict = strict;
      opts.threads = threads;
      const int code = run_pipeline(scn, outdir, opts);
      if (code == kExitOk) {
        std::cout << "pipeline ok: " << outdir << "/pipeline.json\n";
      } else {
        std::cout << "pipeline refused certification (see " << outdir
                  << "/containment.json)\n";
      }
      return code;
    }
    if (cmd_tube->parsed()) stage_tube(scn, outdir);
    if (cmd_fit->parsed()) stage_fit(scn, outdir);
    if (cmd_errbound->parsed()) stage_errbound(scn, outdir);
    if (cmd_dp->parsed()) stage_dp(scn, outdir);
    if (cmd_solve->parsed()) {
      if (!solve_points.empty()) {
        // pointwise solves at user-supplied augmented states
        const ModelEntry entry = model_entries(scn).front();
        const LiftMap lift = scn.make_lift(entry.lift);
        const LiftedLinearModel model = LiftedLinearModel::load(model_path(outdir, entry.label));
        const DemoSystem demo = scn.make_system();
        AugTargetOptions topts;
        topts.validation = scn.validation;
        const AugTargetPair pair = make_aug_targets(scn.base_target(), lift, scn.eta,
                                                    scn.aug_mode(), scn.aug_level, topts);
        HopfProblem prob;
        prob.model = model;
        prob.target = scn.sense == GameSense::reach ? pair.inner : pair.outer;
        prob.t = 0.0;
        prob.T = scn.horizons.back();
        prob.delta = scn.delta_override.value_or(0.0);
        prob.sense = scn.sense;
        prob.u_ball = demo.u_ball;
        prob.d_ball = demo.d_ball;
        prob.quadrature_nodes = scn.hopf_nodes;

        std::ifstream in(solve_points);
        if (!in) throw std::invalid_argument("solve: cannot open " + solve_points);
        std::vector<Vec> points;
        std::string line;
        while (std::getline(in, line)) {
          if (line.empty()) continue;
          std::stringstream ss(line);
          std::vector<double> vals;
          std::string field;
          while (std::getline(ss, field, ',')) vals.push_back(std::stod(field));
          points.push_back(Eigen::Map<Vec>(vals.data(), static_cast<Eigen::Index>(vals.size())));
        }
        HopfSolveOptions hopts = scn.hopf;
        hopts.seed = scn.seed;
        const PointwiseValues solved = solve_grid(prob, points, hopts, threads);
        std::ofstream out(outdir + "/points_values.csv");
        out << "value,converged\n";
        for (std::size_t i = 0; i < solved.values.size(); ++i) {
          out << format_double(solved.values[i]) << "," << (solved.converged[i] ? 1 : 0)
              << "\n";
        }
        std::cout << "wrote " << outdir << "/points_values.csv\n";
      } else {
        stage_solve(scn, outdir, threads);
      }
    }
    if (cmd_compare->parsed()) {
      stage_compare(scn, outdir);
      if (strict) {
        std::ifstream in(outdir + "/containment.json");
        auto doc = nlohmann::json::parse(in);
        if (doc.at("total_violations").get<long>() > 0 || doc.at("ablation").get<bool>()) {
          return kExitContainment;
        }
      }
    }
    if (cmd_rollout->parsed()) stage_rollout(scn, outdir);
    if (cmd_contours->parsed()) {
      const ValueGrid grid = ValueGrid::load(grid_file);
      emit_contours(grid, contour_level, contour_out);
      std::cout << "wrote " << contour_out << "\n";
    }
    return kExitOk;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
}
