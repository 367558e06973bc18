#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "wqc/wqc.hpp"

namespace fs = std::filesystem;
using namespace wqc;

namespace {

struct Flags {
  std::string net, hydraulics, scenario, out, controller;
  std::optional<int> segments, horizon;
  std::optional<double> yref, lambda;
  std::optional<std::uint64_t> seed;
  bool paper_literal = false;
  bool no_timing = false;
};

void add_model_flags(CLI::App* c, Flags& f) {
  c->add_option("--net", f.net, "network file");
  c->add_option("--hydraulics", f.hydraulics, "hydraulic schedule CSV");
  c->add_option("--segments", f.segments, "segments per pipe");
  c->add_flag("--paper-literal-reaction", f.paper_literal, "fold pipe reaction without the step length");
}

void add_scenario_flags(CLI::App* c, Flags& f) {
  c->add_option("--scenario", f.scenario, "scenario JSON file")->required();
  c->add_option("--net", f.net, "override network file");
  c->add_option("--hydraulics", f.hydraulics, "override hydraulic schedule");
  c->add_option("--segments", f.segments, "override segments per pipe");
  c->add_option("--horizon", f.horizon, "override prediction horizon (steps)");
  c->add_option("--yref", f.yref, "override reference concentration (mg/L)");
  c->add_option("--lambda", f.lambda, "override chlorine price ($/mg)");
  c->add_option("--seed", f.seed, "override random seed");
  c->add_option("--out", f.out, "output directory");
  c->add_flag("--paper-literal-reaction", f.paper_literal, "fold pipe reaction without the step length");
  c->add_flag("--no-timing", f.no_timing, "omit wall-clock timing from the report");
}

ScenarioConfig scenario_with_overrides(const Flags& f) {
  ScenarioConfig sc = load_scenario(f.scenario);
  if (!f.net.empty()) sc.network = f.net;
  if (!f.hydraulics.empty()) sc.hydraulics = f.hydraulics;
  if (f.segments) {
    sc.segments = *f.segments;
    sc.segments_by_pipe.clear();
  }
  if (f.horizon) sc.mpc.horizon_steps = *f.horizon;
  if (f.yref) sc.mpc.y_ref = *f.yref;
  if (f.lambda) sc.mpc.lambda = *f.lambda;
  if (f.seed) sc.seed = *f.seed;
  if (!f.controller.empty()) sc.controller = f.controller;
  if (f.paper_literal) sc.paper_literal_reaction = true;
  if (f.no_timing) sc.timing = false;
  return sc;
}

WaterNetwork load_net(const std::string& path) {
  if (path.empty()) throw ConfigError("--net is required");
  return parse_network(read_file(path));
}

HydraulicProfile load_hyd(const std::string& path, const WaterNetwork& net, double period_s) {
  if (path.empty()) throw ConfigError("--hydraulics is required");
  return load_hydraulics(read_file(path), net, period_s);
}

std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + v[i];
  return s;
}

void print_metrics(const std::string& label, const ScenarioReport& rep) {
  std::printf("%-4s  reference_deviation %.6g  smoothness %.6g  chlorine_cost_usd %.6g  total %.6g\n", label.c_str(),
              rep.metrics.reference_deviation, rep.metrics.smoothness, rep.metrics.chlorine_cost_usd,
              rep.metrics.total());
}

void report_run(const ScenarioReport& rep, const ScenarioConfig& sc) {
  print_metrics(rep.controller, rep);
  for (const auto& w : rep.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  if (rep.controller == "mpc" && !sc.mpc.sensors.empty()) {
    const auto ts = tracking_summary(rep, sc);
    std::printf("tracking  max steady error %.4g%%  max after first horizon %.4g mg/L\n",
                100.0 * ts.max_steady_error, ts.max_after_first_horizon);
    for (const auto& [t, rec] : ts.recoveries) {
      if (rec)
        std::printf("event at %g s  recovered after %g s\n", t, *rec);
      else
        std::printf("event at %g s  not recovered\n", t);
    }
  }
  if (rep.wall_ms_per_control_step) std::printf("wall ms per control step %.4g\n", *rep.wall_ms_per_control_step);
}

int cmd_inspect(const Flags& f, const std::string& positional) {
  const WaterNetwork net = load_net(f.net.empty() ? positional : f.net);
  const auto c = net.counts();
  std::printf("junctions %d reservoirs %d tanks %d pipes %d pumps %d valves %d\n", c.junctions, c.reservoirs, c.tanks,
              c.pipes, c.pumps, c.valves);
  IncidenceSet inc = build_incidence(net);
  if (!f.hydraulics.empty()) {
    const auto prof = load_hyd(f.hydraulics, net, 3600.0);
    inc = orient_by_flow(inc, prof.periods.front().link_flow);
    std::printf("hydraulic periods %zu%s\n", prof.periods.size(), prof.consistent ? "" : " (balance warnings)");
    for (const auto& w : prof.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  }
  const auto d = dependence_order(net, inc);
  std::printf("order pipes: %s\n", join(d.pipes).c_str());
  std::printf("order nodes: %s\n", join(d.upstream_nodes).c_str());
  std::printf("order pumps/valves: %s\n", join(d.short_links).c_str());
  std::printf("order fed nodes: %s\n", join(d.downstream_nodes).c_str());
  return 0;
}

int cmd_build(const Flags& f, int period, double align) {
  const WaterNetwork net = load_net(f.net);
  const auto prof = load_hyd(f.hydraulics, net, 3600.0);
  if (period < 0 || period >= int(prof.periods.size())) throw ConfigError("period out of range");
  const auto& hp = prof.periods[period];
  const IncidenceSet inc = orient_by_flow(build_incidence(net), hp.link_flow);
  Discretization disc = uniform_discretization(net, f.segments.value_or(100));
  compute_time_step(net, disc, hp.link_flow, align);
  AssemblyOptions opt;
  opt.paper_literal_reaction = f.paper_literal;
  const auto sys = assemble_system(net, inc, disc, hp, build_reaction(net), period, opt);
  const fs::path dir = f.out.empty() ? fs::path("matrices") : fs::path(f.out);
  fs::create_directories(dir);
  {
    std::ofstream a(dir / "A.csv", std::ios::binary);
    write_triplets(a, sys.A);
    std::ofstream b(dir / "B.csv", std::ios::binary);
    write_triplets(b, sys.B);
    std::ofstream m(dir / "index_map.json", std::ios::binary);
    m << index_map_json(sys.map).dump(2) << "\n";
    if (!a || !b || !m) throw ConfigError("cannot write matrices to '" + dir.string() + "'");
  }
  std::printf("states %d inputs %d nnz(A) %ld nnz(B) %ld dt %g s\n", sys.states(), sys.inputs(), long(sys.A.nonZeros()),
              long(sys.B.nonZeros()), sys.dt);
  return 0;
}

int cmd_simulate(const Flags& f, double u_value, double initial, double align) {
  const WaterNetwork net = load_net(f.net);
  const auto prof = load_hyd(f.hydraulics, net, 3600.0);
  ScheduleOptions opt;
  opt.segments.assign(net.pipes.size(), f.segments.value_or(100));
  opt.align_s = align;
  opt.assembly.paper_literal_reaction = f.paper_literal;
  const auto systems = build_schedule(net, prof, opt);
  std::vector<std::string> record;
  for (int n = 0; n < net.node_count(); ++n) record.push_back(net.node_id(n));
  for (const auto& p : net.pipes) record.push_back(p.id);
  const Vec x0 = initial_state(net, systems.front().map, initial);
  const int nn = net.node_count();
  const Trajectory tr =
      simulate(systems, prof.period_s, x0, [&](double, int) { return Vec::Constant(nn, u_value); }, record);
  const Trajectory pm = tr.per_minute();
  if (!f.out.empty()) {
    fs::create_directories(f.out);
    std::ofstream out(fs::path(f.out) / "trajectories.csv", std::ios::binary);
    out << "time,entity,value\n";
    for (size_t k = 0; k < pm.time.size(); ++k)
      for (size_t i = 0; i < pm.names.size(); ++i)
        out << detail::fmt_double(pm.time[k]) << "," << pm.names[i] << "," << detail::fmt_double(pm.values[k][i])
            << "\n";
    if (!out) throw ConfigError("cannot write trajectories to '" + f.out + "'");
  }
  std::printf("simulated %g s in %zu steps\n", tr.time.back(), tr.time.size() - 1);
  for (size_t i = 0; i < tr.names.size(); ++i) std::printf("final %s %.6g\n", tr.names[i].c_str(), tr.values.back()[i]);
  return 0;
}

int cmd_control(const Flags& f) {
  const ScenarioConfig sc = scenario_with_overrides(f);
  const ScenarioReport rep = run_closed_loop(sc);
  report_run(rep, sc);
  if (!f.out.empty()) export_report(rep, f.out);
  return 0;
}

int cmd_compare(const Flags& f) {
  ScenarioConfig sc = scenario_with_overrides(f);
  if (sc.rbc.rules.empty()) throw ConfigError("scenario has no rule table");
  sc.controller = "mpc";
  const ScenarioReport mpc = run_closed_loop(sc);
  sc.controller = "rbc";
  const ScenarioReport rbc = run_closed_loop(sc);
  print_metrics("mpc", mpc);
  print_metrics("rbc", rbc);
  std::printf("mpc/rbc total ratio %.6g\n", mpc.metrics.total() / rbc.metrics.total());
  if (!f.out.empty()) {
    export_report(mpc, fs::path(f.out) / "mpc");
    export_report(rbc, fs::path(f.out) / "rbc");
  }
  return 0;
}

int cmd_scale(const std::vector<std::string>& nets, int segments, int horizon) {
  if (nets.empty()) throw ConfigError("--net is required");
  for (const auto& path : nets) {
    const WaterNetwork net = load_net(path);
    const auto c = net.counts();
    const auto v = count_variables(c, std::int64_t(c.pipes) * segments, horizon);
    if (nets.size() > 1) std::printf("%s: ", path.c_str());
    std::printf("LP %lld, QP %lld, reduction %d%%\n", (long long)v.lp, (long long)v.qp, v.reduction_percent());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Water-quality modeling and booster-station control", "wqc"};
  app.require_subcommand(1, 1);
  Flags f;

  std::string positional;
  auto* inspect = app.add_subcommand("inspect", "component counts and dependence order");
  inspect->add_option("file", positional, "network file");
  inspect->add_option("--net", f.net, "network file");
  inspect->add_option("--hydraulics", f.hydraulics, "orient links by the first hydraulic period");

  int period = 0;
  double align = 3600.0;
  auto* build = app.add_subcommand("build-matrices", "export A, B and the state index map");
  add_model_flags(build, f);
  build->add_option("--period", period, "hydraulic period index");
  build->add_option("--align", align, "interval the step must divide (s)");
  build->add_option("--out", f.out, "output directory");

  double u_value = 0.0, initial = 0.0;
  auto* sim = app.add_subcommand("simulate", "open-loop run with constant booster input");
  add_model_flags(sim, f);
  sim->add_option("--u", u_value, "booster concentration at every node (mg/L)");
  sim->add_option("--initial", initial, "initial concentration (mg/L)");
  sim->add_option("--align", align, "interval the step must divide (s)");
  sim->add_option("--out", f.out, "output directory");

  auto* control = app.add_subcommand("control", "closed-loop run of a scenario");
  add_scenario_flags(control, f);
  control->add_option("--controller", f.controller, "mpc or rbc")->check(CLI::IsMember({"mpc", "rbc"}));

  auto* compare = app.add_subcommand("compare-rbc", "run MPC and rule-based control on one seed");
  add_scenario_flags(compare, f);

  std::vector<std::string> nets;
  int scale_segments = 100, scale_horizon = 300;
  auto* scale = app.add_subcommand("scale-report", "worst-case decision-variable counts");
  scale->add_option("--net", nets, "network file(s)");
  scale->add_option("--segments", scale_segments, "segments per pipe");
  scale->add_option("--horizon", scale_horizon, "prediction horizon (steps)");

  if (argc <= 1) {
    std::cerr << app.help();
    return 1;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*inspect) return cmd_inspect(f, positional);
    if (*build) return cmd_build(f, period, align);
    if (*sim) return cmd_simulate(f, u_value, initial, align);
    if (*control) return cmd_control(f);
    if (*compare) return cmd_compare(f);
    if (*scale) return cmd_scale(nets, scale_segments, scale_horizon);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const ModelError& e) {
    std::cerr << "model error: " << e.what() << "\n";
    return 2;
  } catch (const SolverError& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return 3;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
