#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "epinet/abc.hpp"
#include "epinet/inference.hpp"
#include "epinet/matching.hpp"
#include "epinet/population.hpp"
#include "epinet/simulator.hpp"

namespace epinet {

// Raised for malformed configuration or input files; the CLI maps it to
// exit code 1.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Contact database: one vertices CSV (id,detect_day,detect_type,gender,
// orientation) plus one edges CSV (id_a,id_b). Extra columns are ignored.
struct LoadedDb {
  SnapshotSequence snapshots;  // observable network at each requested day
  Snapshot seed;               // network at the first requested day
};

LoadedDb load_contact_db(const std::string& vertices_path, const std::string& edges_path,
                         const std::vector<int>& days);

// Directory of per-day snapshot files vertices_D.csv / edges_D.csv.
SnapshotSequence load_snapshot_dir(const std::string& dir);
void export_snapshot_files(const SnapshotSequence& snaps, const std::string& dir);

// Per-day snapshot files plus summary.csv (day, n_detected, n_random,
// n_traced, n_edges, n_components, largest_component, n_infected_total).
void export_snapshots(const Trajectory& traj, const std::string& dir);

void write_contact_db(const Snapshot& net, const std::string& vertices_path,
                      const std::string& edges_path);
void write_counts_csv(const Trajectory& traj, const std::string& path);
void write_diagnostics_csv(const std::vector<IterationDiag>& diags, const std::string& path);
void write_posterior_csv(const std::vector<Particle>& pop, const std::string& path);
void write_particles_csv(const std::vector<Particle>& pop, const std::string& path);
void write_curves_csv(const CurveStats& curves, const std::string& path);

// Flat key=value configuration file; '#' starts a comment line.
class KeyValueConfig {
 public:
  static KeyValueConfig parse_file(const std::string& path);
  static KeyValueConfig parse_string(const std::string& text);

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  void set(const std::string& key, const std::string& value) { values_[key] = value; }

  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_real(const std::string& key) const;
  double get_real(const std::string& key, double fallback) const;
  int get_int(const std::string& key) const;
  int get_int(const std::string& key, int fallback) const;
  std::vector<int> get_int_list(const std::string& key) const;

 private:
  std::map<std::string, std::string> values_;
};

SimConfig sim_config_from(const KeyValueConfig& kv);
Theta theta_from(const KeyValueConfig& kv);
PriorSpec prior_from(const KeyValueConfig& kv);
AbcConfig abc_config_from(const KeyValueConfig& kv);
MatchParams match_params_from(const KeyValueConfig& kv);

}  // namespace epinet
