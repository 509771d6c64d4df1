#include "epinet/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "epinet/io.hpp"

namespace fs = std::filesystem;

namespace epinet {

namespace {

void run_simulate(const std::string& config_path, std::optional<int> seed,
                  const std::string& out_dir) {
  KeyValueConfig kv = KeyValueConfig::parse_file(config_path);
  if (seed) kv.set("seed", std::to_string(*seed));
  const SimConfig sim = sim_config_from(kv);
  const Theta theta = theta_from(kv);

  const Trajectory traj = run(theta, sim);

  fs::create_directories(out_dir);
  export_snapshots(traj, out_dir);
  write_counts_csv(traj, out_dir + "/counts.csv");
  const Snapshot final_net = observable_network(traj.graph, static_cast<int>(sim.horizon));
  write_contact_db(final_net, out_dir + "/db_vertices.csv", out_dir + "/db_edges.csv");

  const auto& last = traj.counts.back();
  std::cout << "simulated " << traj.events.size() << " events to day "
            << sim.horizon << ": S=" << last.susceptible << " I=" << last.infective
            << " R=" << last.removed << "; wrote " << traj.snapshots.size() << " snapshots to "
            << out_dir << "\n";
}

int run_infer(const std::string& config_path, const std::string& observed_dir,
              std::optional<int> seed, const std::string& out_dir) {
  KeyValueConfig kv = KeyValueConfig::parse_file(config_path);
  if (seed) kv.set("seed", std::to_string(*seed));

  const SnapshotSequence observed = load_snapshot_dir(observed_dir);
  if (observed.empty()) throw ConfigError("no snapshots found in " + observed_dir);

  EpidemicAbcSetup setup;
  setup.sim = sim_config_from(kv);
  setup.match = match_params_from(kv);
  setup.sim.snapshot_days.clear();
  for (const auto& s : observed) setup.sim.snapshot_days.push_back(s.day);
  setup.sim.horizon = static_cast<double>(observed.back().day);

  if (kv.has("db.vertices") != kv.has("db.edges"))
    throw ConfigError("db.vertices and db.edges must be given together");
  if (kv.has("db.vertices")) {
    const LoadedDb db = load_contact_db(kv.get_string("db.vertices"), kv.get_string("db.edges"),
                                        setup.sim.snapshot_days);
    setup.seed = db.seed;
    setup.sim.start_day = static_cast<double>(setup.sim.snapshot_days.front());
  }
  setup.sim.validate();

  const PriorSpec prior = prior_from(kv);
  const AbcConfig abc_cfg = abc_config_from(kv);

  RngStream root(static_cast<std::uint64_t>(kv.get_int("seed", 0)));
  const AbcResult result =
      infer_epidemic(prior, abc_cfg, setup, observed, root.derive(0x1f3a));

  fs::create_directories(out_dir);
  write_diagnostics_csv(result.diagnostics, out_dir + "/diagnostics.csv");
  if (!result.population.empty()) {
    write_posterior_csv(result.population, out_dir + "/posterior.csv");
    write_particles_csv(result.population, out_dir + "/particles.csv");
    const CurveStats curves = resimulate_curves(result.population, setup, root.derive(0x2c5d));
    write_curves_csv(curves, out_dir + "/curves.csv");
  }

  if (!result.converged) {
    std::cerr << "abc did not converge: " << result.message << "\n";
    return 2;
  }
  const auto [mean, sd] = posterior_summary(result.population);
  const char* names[6] = {"i0", "alpha", "gamma", "beta", "lambda", "sigma"};
  std::cout << "abc converged after " << result.diagnostics.size() << " iterations\n";
  for (std::size_t c = 0; c < mean.size(); ++c)
    std::cout << "  " << names[c] << " = " << mean[c] << " (sd " << sd[c] << ")\n";
  return 0;
}

void run_match(const std::string& dir_a, const std::string& dir_b, double nu, double omega,
               double xi) {
  const SnapshotSequence a = load_snapshot_dir(dir_a);
  const SnapshotSequence b = load_snapshot_dir(dir_b);
  if (a.empty() || b.empty()) throw ConfigError("empty snapshot directory");
  if (a.size() != b.size()) throw ConfigError("snapshot directories disagree on subdivision");
  for (std::size_t k = 0; k < a.size(); ++k)
    if (a[k].day != b[k].day) throw ConfigError("snapshot directories disagree on days");

  std::vector<double> phis;
  const double total = temporal_objective(a, b, omega, nu, xi, 100, 1e-6, &phis);
  for (std::size_t k = 0; k < phis.size(); ++k)
    std::printf("phi[day=%d] = %.9g\n", a[k].day, phis[k]);
  std::printf("Phi_pi = %.9g\n", total);
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  std::vector<std::string> storage = args;
  std::vector<char*> argv;
  std::string name = "epinet";
  argv.push_back(name.data());
  for (auto& s : storage) argv.push_back(s.data());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

int run_cli(int argc, char** argv) {
  CLI::App app{"SIR epidemics on time-evolving contact graphs: simulation, "
               "graph matching and ABC-SMC inference"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out", observed_dir, dir_a, dir_b;
  std::optional<int> seed;
  double nu = 0.2, omega = 0.5, xi = 0.0;

  CLI::App* sim = app.add_subcommand("simulate", "run one epidemic and export its snapshots");
  sim->add_option("--config", config_path, "key=value config file")->required();
  sim->add_option("--seed", seed, "override the config seed");
  sim->add_option("--out", out_dir, "output directory");

  CLI::App* inf = app.add_subcommand("infer", "fit parameters to observed snapshots via ABC-SMC");
  inf->add_option("--config", config_path, "key=value config file")->required();
  inf->add_option("--observed", observed_dir, "directory of observed snapshots")->required();
  inf->add_option("--seed", seed, "override the config seed");
  inf->add_option("--out", out_dir, "output directory");

  CLI::App* match = app.add_subcommand("match", "temporal matching objective of two snapshot dirs");
  match->add_option("--a", dir_a, "first snapshot directory")->required();
  match->add_option("--b", dir_b, "second snapshot directory")->required();
  match->add_option("--nu", nu, "label/structure trade-off");
  match->add_option("--omega", omega, "temporal weighting");
  match->add_option("--xi", xi, "adjacency pad value");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (sim->parsed()) {
      run_simulate(config_path, seed, out_dir);
      return 0;
    }
    if (inf->parsed()) return run_infer(config_path, observed_dir, seed, out_dir);
    if (match->parsed()) {
      run_match(dir_a, dir_b, nu, omega, xi);
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

}  // namespace epinet
