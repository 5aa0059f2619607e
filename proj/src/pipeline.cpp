#include "liftreach/pipeline.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

namespace liftreach {

namespace fs = std::filesystem;
using nlohmann::json;

ContainmentCell compare_sets(const ValueGrid& hopf, const ValueGrid& dp, GameSense sense,
                             double tol) {
  if (hopf.axes.size() != dp.axes.size()) {
    throw std::invalid_argument("compare_sets: grid dimension mismatch");
  }
  for (std::size_t d = 0; d < hopf.axes.size(); ++d) {
    if (hopf.axes[d].size() != dp.axes[d].size()) {
      throw std::invalid_argument("compare_sets: grid size mismatch");
    }
    for (std::size_t i = 0; i < hopf.axes[d].size(); ++i) {
      if (std::abs(hopf.axes[d][i] - dp.axes[d][i]) > 1e-12) {
        throw std::invalid_argument("compare_sets: grid coordinates mismatch");
      }
    }
  }
  ContainmentCell cell;
  cell.tolerance = tol;
  double cell_area = 1.0;
  for (const auto& axis : hopf.axes) cell_area *= axis[1] - axis[0];
  for (std::size_t i = 0; i < hopf.values.size(); ++i) {
    const bool h_in = hopf.values[i] <= 0.0;
    const bool dp_in = dp.values[i] <= 0.0;
    cell.certified += h_in ? 1 : 0;
    cell.oracle_certified += dp_in ? 1 : 0;
    if (sense == GameSense::reach) {
      if (h_in && dp.values[i] > tol) ++cell.violations;
      if (h_in && dp.values[i] <= tol) ++cell.confirmed;
    } else {
      if (!h_in && dp.values[i] <= -tol) ++cell.violations;
      if (dp.values[i] <= -tol && h_in) ++cell.confirmed;
    }
  }
  cell.hopf_area = static_cast<double>(cell.certified) * cell_area;
  cell.dp_area = static_cast<double>(cell.oracle_certified) * cell_area;
  return cell;
}

void emit_contours(const ValueGrid& grid, double level, const std::string& path) {
  write_contours_csv(path, extract_contours(grid, level));
}

std::string model_path(const std::string& outdir, const std::string& label) {
  return outdir + "/model_" + label + ".json";
}
std::string delta_path(const std::string& outdir, const std::string& label) {
  return outdir + "/delta_" + label + ".json";
}
std::string dp_grid_path(const std::string& outdir, std::size_t k) {
  return outdir + "/dp_" + std::to_string(k) + ".vg";
}
std::string hopf_grid_path(const std::string& outdir, const std::string& label,
                           std::size_t k) {
  return outdir + "/hopf_" + label + "_" + std::to_string(k) + ".vg";
}

std::vector<ModelEntry> model_entries(const Scenario& scn) {
  std::vector<ModelEntry> entries;
  for (const auto& lift : scn.lifts) {
    entries.push_back({lift, lift.label(), scn.model.kind, false});
  }
  for (const auto& baseline : scn.baselines) {
    entries.push_back({LiftSpec{"identity"}, baseline, baseline, true});
  }
  return entries;
}

namespace {

std::vector<std::vector<double>> scenario_axes(const Scenario& scn) {
  std::vector<std::vector<double>> axes;
  for (std::size_t d = 0; d < scn.grid.n.size(); ++d) {
    axes.push_back(linspace(scn.grid.box.lo[static_cast<Eigen::Index>(d)],
                            scn.grid.box.hi[static_cast<Eigen::Index>(d)],
                            static_cast<std::size_t>(scn.grid.n[d])));
  }
  return axes;
}

double max_horizon(const Scenario& scn) { return scn.horizons.back(); }

void write_tube_csv(const std::string& path, const BoxTube& tube) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("stage_tube: cannot open " + path);
  const Eigen::Index n = tube.boxes.front().dim();
  out << "time";
  for (Eigen::Index i = 0; i < n; ++i) out << ",lo" << (i + 1);
  for (Eigen::Index i = 0; i < n; ++i) out << ",hi" << (i + 1);
  out << "\n";
  for (std::size_t k = 0; k < tube.times.size(); ++k) {
    out << format_double(tube.times[k]);
    for (Eigen::Index i = 0; i < n; ++i) out << "," << format_double(tube.boxes[k].lo[i]);
    for (Eigen::Index i = 0; i < n; ++i) out << "," << format_double(tube.boxes[k].hi[i]);
    out << "\n";
  }
}

BoxTube read_tube_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("pipeline: missing tube artifact " + path +
                                       " (run the tube stage first)");
  BoxTube tube;
  tube.method = "loaded";
  std::string line;
  std::getline(in, line);  // header
  const auto cols = std::count(line.begin(), line.end(), ',') + 1;
  const Eigen::Index n = static_cast<Eigen::Index>((cols - 1) / 2);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string fieldstr;
    std::vector<double> fields;
    while (std::getline(ss, fieldstr, ',')) fields.push_back(std::stod(fieldstr));
    tube.times.push_back(fields[0]);
    Vec lo(n), hi(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      lo[i] = fields[static_cast<std::size_t>(1 + i)];
      hi[i] = fields[static_cast<std::size_t>(1 + n + i)];
    }
    tube.boxes.emplace_back(lo, hi);
  }
  return tube;
}

QuadTarget hopf_target(const Scenario& scn, const LiftMap& lift, AugTargetAudit* audit) {
  AugTargetOptions opts;
  opts.validation = scn.validation;
  opts.seed = derive_seed(scn.seed, 0xA0D17);
  const AugTargetPair pair =
      make_aug_targets(scn.base_target(), lift, scn.eta, scn.aug_mode(), scn.aug_level,
                       opts, audit);
  return scn.sense == GameSense::reach ? pair.inner : pair.outer;
}

double load_delta(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("pipeline: missing delta artifact " + path +
                                       " (run the errbound stage first)");
  json doc = json::parse(in);
  return doc.at("delta_star").get<double>();
}

HopfProblem make_problem(const Scenario& scn, const LiftedLinearModel& model,
                         const QuadTarget& target, const DemoSystem& demo, double horizon,
                         double delta) {
  HopfProblem prob;
  prob.model = model;
  prob.target = target;
  prob.t = 0.0;
  prob.T = horizon;
  prob.delta = delta;
  prob.sense = scn.sense;
  prob.u_ball = demo.u_ball;
  prob.d_ball = demo.d_ball;
  prob.quadrature_nodes = scn.hopf_nodes;
  return prob;
}

}  // namespace

void stage_tube(const Scenario& scn, const std::string& outdir) {
  const DemoSystem demo = scn.make_system();
  const Box target_box = scn.base_target().bounding_box();
  const BoxTube tube = backward_tube(demo.sys, demo.u_ball, demo.d_ball, target_box, 0.0,
                                     max_horizon(scn), scn.tube);
  write_tube_csv(outdir + "/tube.csv", tube);
  json meta;
  meta["method"] = tube.method;
  meta["steps"] = tube.times.size();
  const Box ub = tube.union_box();
  meta["union_lo"] = std::vector<double>(ub.lo.data(), ub.lo.data() + ub.lo.size());
  meta["union_hi"] = std::vector<double>(ub.hi.data(), ub.hi.data() + ub.hi.size());
  std::ofstream(outdir + "/tube.json") << meta.dump(2) << "\n";
}

void stage_fit(const Scenario& scn, const std::string& outdir) {
  const DemoSystem demo = scn.make_system();
  const auto entries = model_entries(scn);
  for (std::size_t e = 0; e < entries.size(); ++e) {
    const auto& entry = entries[e];
    const LiftMap lift = scn.make_lift(entry.lift);
    LiftedLinearModel model;
    if (entry.model_kind == "analytic") {
      model = analytic_slow_manifold_model(scn.model.center,
                                           scn.system_params.count("mu")
                                               ? scn.system_params.at("mu") : -0.05,
                                           scn.system_params.count("lambda")
                                               ? scn.system_params.at("lambda") : -1.0);
    } else if (entry.model_kind == "taylor") {
      model = taylor_model(demo.sys, lift, scn.model.center);
    } else {
      const Box sample_box = read_tube_csv(outdir + "/tube.csv").union_box();
      const TrajectorySample data =
          sample_trajectories(demo.sys, sample_box, demo.u_ball, demo.d_ball,
                              scn.model.samples, scn.model.snippet_steps, scn.model.sample_h,
                              derive_seed(scn.seed, 0xF17 + e));
      model = entry.model_kind == "dmd" ? fit_dmd(data, scn.model.ridge)
                                        : fit_edmd(lift, data, scn.model.ridge);
    }
    model.save(model_path(outdir, entry.label));
  }
}

void stage_errbound(const Scenario& scn, const std::string& outdir) {
  const DemoSystem demo = scn.make_system();
  const BoxTube tube = read_tube_csv(outdir + "/tube.csv");
  for (const auto& entry : model_entries(scn)) {
    const LiftMap lift = scn.make_lift(entry.lift);
    const LiftedLinearModel model = LiftedLinearModel::load(model_path(outdir, entry.label));
    const ErrorBound bound =
        error_bound_delta(model, lift, demo.sys, demo.u_ball, demo.d_ball, tube,
                          scn.errbound_grid, scn.errbound_inflation);
    json doc;
    doc["delta_star"] = scn.delta_override ? *scn.delta_override : bound.delta_star;
    doc["computed_delta_star"] = bound.delta_star;
    doc["pre_inflation"] = bound.pre_inflation;
    doc["inflation"] = bound.inflation;
    doc["grid_per_dim"] = bound.grid_per_dim;
    doc["ablation"] = scn.delta_override.has_value();
    doc["box_lo"] = std::vector<double>(bound.box.lo.data(),
                                        bound.box.lo.data() + bound.box.lo.size());
    doc["box_hi"] = std::vector<double>(bound.box.hi.data(),
                                        bound.box.hi.data() + bound.box.hi.size());
    std::ofstream(delta_path(outdir, entry.label)) << doc.dump(2) << "\n";
  }
}

void stage_dp(const Scenario& scn, const std::string& outdir) {
  const DemoSystem demo = scn.make_system();
  const auto axes = scenario_axes(scn);
  const QuadTarget tgt = scn.base_target();
  const DpSense sense = scn.sense == GameSense::reach ? DpSense::reach : DpSense::avoid;
  for (std::size_t k = 0; k < scn.horizons.size(); ++k) {
    ValueGrid grid = solve_dp(demo.sys, demo.u_ball, demo.d_ball, tgt, sense, axes, 0.0,
                              scn.horizons[k], scn.dp_cfl);
    grid.save(dp_grid_path(outdir, k));
    emit_contours(grid, 0.0, outdir + "/dp_contour_" + std::to_string(k) + ".csv");
  }
}

void stage_solve(const Scenario& scn, const std::string& outdir, int threads) {
  const DemoSystem demo = scn.make_system();
  const auto axes = scenario_axes(scn);

  // base grid points in row-major order
  std::vector<Vec> base_points;
  base_points.reserve(static_cast<std::size_t>(scn.grid.n[0]) * scn.grid.n[1]);
  for (double x1 : axes[0]) {
    for (double x2 : axes[1]) {
      base_points.push_back((Vec(2) << x1, x2).finished());
    }
  }

  for (const auto& entry : model_entries(scn)) {
    const LiftMap lift = scn.make_lift(entry.lift);
    const LiftedLinearModel model = LiftedLinearModel::load(model_path(outdir, entry.label));
    const double delta = load_delta(delta_path(outdir, entry.label));
    AugTargetAudit audit;
    const QuadTarget target = hopf_target(scn, lift, &audit);

    std::vector<Vec> lifted;
    lifted.reserve(base_points.size());
    for (const Vec& x : base_points) lifted.push_back(lift.lift(x));

    for (std::size_t k = 0; k < scn.horizons.size(); ++k) {
      HopfProblem prob = make_problem(scn, model, target, demo, scn.horizons[k], delta);
      HopfSolveOptions opts = scn.hopf;
      opts.seed = derive_seed(scn.seed, 0x50E + k);
      const PointwiseValues solved = solve_grid(prob, lifted, opts, threads);

      ValueGrid grid;
      grid.axes = axes;
      grid.values = solved.values;
      grid.time = 0.0;
      grid.sense = scn.sense == GameSense::reach ? "reach" : "avoid";
      grid.save(hopf_grid_path(outdir, entry.label, k));
      emit_contours(grid, 0.0,
                    outdir + "/hopf_contour_" + entry.label + "_" + std::to_string(k) + ".csv");

      std::ofstream csv(outdir + "/hopf_" + entry.label + "_" + std::to_string(k) + ".csv");
      csv << "x1,x2";
      for (int i = 0; i < lift.n_k(); ++i) csv << ",g" << (i + 1);
      csv << ",value,converged\n";
      for (std::size_t i = 0; i < base_points.size(); ++i) {
        csv << format_double(base_points[i][0]) << "," << format_double(base_points[i][1]);
        for (Eigen::Index j = 0; j < lifted[i].size(); ++j) {
          csv << "," << format_double(lifted[i][j]);
        }
        csv << "," << format_double(solved.values[i]) << ","
            << (solved.converged[i] ? 1 : 0) << "\n";
      }
    }
  }
}

void stage_compare(const Scenario& scn, const std::string& outdir) {
  const auto entries = model_entries(scn);
  json doc;
  doc["sense"] = scn.sense == GameSense::reach ? "reach" : "avoid";
  doc["tolerance"] = scn.compare_tolerance;
  doc["ablation"] = scn.delta_override.has_value();
  doc["cells"] = json::array();
  long total_violations = 0;

  std::vector<ValueGrid> dp_grids;
  for (std::size_t k = 0; k < scn.horizons.size(); ++k) {
    dp_grids.push_back(ValueGrid::load(dp_grid_path(outdir, k)));
  }

  for (const auto& entry : entries) {
    for (std::size_t k = 0; k < scn.horizons.size(); ++k) {
      const ValueGrid hopf = ValueGrid::load(hopf_grid_path(outdir, entry.label, k));
      ContainmentCell cell = compare_sets(hopf, dp_grids[k], scn.sense, scn.compare_tolerance);
      cell.lift = entry.label;
      cell.horizon = scn.horizons[k];
      cell.baseline = entry.baseline;
      if (!entry.baseline) total_violations += cell.violations;
      json cj;
      cj["lift"] = cell.lift;
      cj["horizon"] = cell.horizon;
      cj["certified"] = cell.certified;
      cj["oracle_certified"] = cell.oracle_certified;
      cj["confirmed"] = cell.confirmed;
      cj["violations"] = cell.violations;
      cj["hopf_area"] = cell.hopf_area;
      cj["dp_area"] = cell.dp_area;
      cj["baseline"] = cell.baseline;
      doc["cells"].push_back(cj);
    }
  }

  // combined envelope over the configured (non-baseline) lifts:
  // union for reach, intersection for avoid
  long primary = 0;
  for (const auto& e : entries) primary += e.baseline ? 0 : 1;
  if (primary > 1) {
    for (std::size_t k = 0; k < scn.horizons.size(); ++k) {
      std::vector<char> combined;
      for (const auto& entry : entries) {
        if (entry.baseline) continue;
        const ValueGrid hopf = ValueGrid::load(hopf_grid_path(outdir, entry.label, k));
        if (combined.empty()) {
          combined.assign(hopf.values.size(), scn.sense == GameSense::reach ? 0 : 1);
        }
        for (std::size_t i = 0; i < hopf.values.size(); ++i) {
          const bool in = hopf.values[i] <= 0.0;
          if (scn.sense == GameSense::reach) combined[i] |= in ? 1 : 0;
          else combined[i] &= in ? 1 : 0;
        }
      }
      const ValueGrid& dp = dp_grids[k];
      long violations = 0, size = 0;
      for (std::size_t i = 0; i < dp.values.size(); ++i) {
        size += combined[i];
        if (scn.sense == GameSense::reach) {
          if (combined[i] && dp.values[i] > scn.compare_tolerance) ++violations;
        } else {
          if (!combined[i] && dp.values[i] <= -scn.compare_tolerance) ++violations;
        }
      }
      total_violations += violations;
      json cj;
      cj["lift"] = scn.sense == GameSense::reach ? "union" : "intersection";
      cj["horizon"] = scn.horizons[k];
      cj["certified"] = size;
      cj["violations"] = violations;
      cj["baseline"] = false;
      doc["cells"].push_back(cj);
    }
  }
  doc["total_violations"] = total_violations;
  std::ofstream(outdir + "/containment.json") << doc.dump(2) << "\n";
}

void stage_rollout(const Scenario& scn, const std::string& outdir) {
  if (!scn.rollout.enabled) return;
  const DemoSystem demo = scn.make_system();
  std::size_t horizon_idx = scn.horizons.size();
  for (std::size_t k = 0; k < scn.horizons.size(); ++k) {
    if (std::abs(scn.horizons[k] - scn.rollout.horizon) < 1e-12) horizon_idx = k;
  }
  if (horizon_idx == scn.horizons.size()) {
    throw std::invalid_argument("stage_rollout: rollout.horizon must be one of horizons");
  }
  const ModelEntry entry = model_entries(scn).front();
  const LiftMap lift = scn.make_lift(entry.lift);
  const LiftedLinearModel model = LiftedLinearModel::load(model_path(outdir, entry.label));
  const double delta = load_delta(delta_path(outdir, entry.label));
  const QuadTarget target = hopf_target(scn, lift, nullptr);
  const ValueGrid hopf = ValueGrid::load(hopf_grid_path(outdir, entry.label, horizon_idx));
  const ValueGrid dp = ValueGrid::load(dp_grid_path(outdir, horizon_idx));

  // certified grid points by the margin, evenly strided down to n_points
  std::vector<Vec> certified;
  for (std::size_t i = 0; i < hopf.axes[0].size(); ++i) {
    for (std::size_t j = 0; j < hopf.axes[1].size(); ++j) {
      const double v = hopf.at(i, j);
      const bool ok = scn.sense == GameSense::reach ? v <= -scn.rollout.value_margin
                                                    : v > scn.rollout.value_margin;
      if (ok) certified.push_back((Vec(2) << hopf.axes[0][i], hopf.axes[1][j]).finished());
    }
  }
  if (certified.empty()) {
    throw std::invalid_argument("stage_rollout: no certified points at the margin");
  }
  std::vector<Vec> x0s;
  const std::size_t want = std::min<std::size_t>(certified.size(),
                                                 static_cast<std::size_t>(scn.rollout.n_points));
  for (std::size_t i = 0; i < want; ++i) {
    x0s.push_back(certified[i * certified.size() / want]);
  }

  std::vector<DisturbancePolicy> policies;
  for (const std::string& name : scn.rollout.policies) {
    DisturbancePolicy policy;
    policy.seed = derive_seed(scn.seed, 0xD0 + policies.size());
    if (name == "zero") policy.kind = DisturbancePolicy::Kind::zero;
    else if (name == "random") policy.kind = DisturbancePolicy::Kind::random;
    else if (name == "extremal_costate") policy.kind = DisturbancePolicy::Kind::extremal_costate;
    else {
      policy.kind = DisturbancePolicy::Kind::extremal_dp;
      policy.dp_grid = &dp;
    }
    policies.push_back(policy);
  }

  HopfProblem prob = make_problem(scn, model, target, demo, scn.rollout.horizon, delta);
  RolloutOptions opts;
  opts.h = scn.rollout.h;
  opts.replan_every = scn.rollout.replan_every;
  opts.value_margin = scn.rollout.value_margin;
  opts.solve = scn.hopf;
  opts.solve.seed = derive_seed(scn.seed, 0x701);
  const RolloutReport report =
      batch_rollouts(demo.sys, lift, prob, scn.base_target(), x0s, policies, opts);
  std::ofstream(outdir + "/rollout.json") << report.to_json() << "\n";
}

int run_pipeline(const Scenario& scenario, const std::string& outdir,
                 const PipelineOptions& opts) {
  Scenario scn = scenario;
  if (opts.seed_override) scn.seed = *opts.seed_override;
  {
    if (fs::exists(outdir + "/pipeline.json") && !opts.force) {
      throw std::invalid_argument("run_pipeline: " + outdir +
                                  " already holds a run; pass force to overwrite");
    }
    fs::create_directories(outdir);
    std::ofstream(outdir + "/scenario.json") << scn.to_json() << "\n";

    stage_tube(scn, outdir);
    stage_fit(scn, outdir);
    stage_errbound(scn, outdir);
    stage_dp(scn, outdir);
    stage_solve(scn, outdir, opts.threads);
    stage_compare(scn, outdir);
    stage_rollout(scn, outdir);

    std::ifstream cin(outdir + "/containment.json");
    json containment = json::parse(cin);
    const long violations = containment.at("total_violations").get<long>();
    const bool ablation = scn.delta_override.has_value();

    json summary;
    summary["name"] = scn.name;
    summary["seed"] = scn.seed;
    summary["ablation"] = ablation;
    summary["total_violations"] = violations;
    summary["certified"] = !ablation && violations == 0;
    summary["horizons"] = scn.horizons;
    json nonempty = json::array();
    for (std::size_t k = 0; k < scn.horizons.size(); ++k) {
      const ValueGrid hopf =
          ValueGrid::load(hopf_grid_path(outdir, model_entries(scn).front().label, k));
      long n = 0;
      for (double v : hopf.values) n += v <= 0.0 ? 1 : 0;
      nonempty.push_back(n);
    }
    summary["certified_points_per_horizon"] = nonempty;
    std::ofstream(outdir + "/pipeline.json") << summary.dump(2) << "\n";

    if (opts.strict && (violations > 0 || ablation)) return kExitContainment;
    return kExitOk;
  }
}

}  // namespace liftreach
