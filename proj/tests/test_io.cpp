#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "epinet/cli.hpp"
#include "epinet/io.hpp"

namespace fs = std::filesystem;
using namespace epinet;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str() const { return path.string(); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool snapshots_equal(const Snapshot& a, const Snapshot& b) {
  if (a.day != b.day || a.detected.size() != b.detected.size() || a.edges != b.edges) return false;
  for (std::size_t k = 0; k < a.detected.size(); ++k) {
    const auto& [ida, xa] = a.detected[k];
    const auto& [idb, xb] = b.detected[k];
    if (ida != idb || xa.gender != xb.gender || xa.orientation != xb.orientation ||
        xa.detection_time != xb.detection_time || xa.detection_type != xb.detection_type)
      return false;
  }
  return true;
}

const char* kVerticesFixture =
    "id,detect_day,detect_type,gender,orientation\n"
    "1,10,RAND,M,HETERO\n"
    "2,20,CT,F,HETERO\n"
    "3,30,RAND,M,BI\n";

const char* kEdgesFixture = "id_a,id_b\n1,2\n";

}  // namespace

TEST_CASE("load_contact_db: hand-built fixture") {
  TempDir dir("epinet_io_fixture");
  write_file(dir.file("vertices.csv"), kVerticesFixture);
  write_file(dir.file("edges.csv"), kEdgesFixture);

  const LoadedDb db = load_contact_db(dir.file("vertices.csv"), dir.file("edges.csv"), {15, 25});
  REQUIRE(db.snapshots.size() == 2);

  const Snapshot& at15 = db.snapshots[0];
  CHECK(at15.day == 15);
  REQUIRE(at15.detected.size() == 1);
  CHECK(at15.detected[0].first == 1);
  CHECK(at15.edges.empty());

  const Snapshot& at25 = db.snapshots[1];
  REQUIRE(at25.detected.size() == 2);
  CHECK(at25.edges.size() == 1);
  CHECK(at25.edges[0] == std::pair<int, int>(1, 2));
  CHECK(at25.detected[1].second.detection_type == DetectionType::ContactTraced);
  CHECK(at25.detected[1].second.gender == Gender::Female);

  // the seed is the network at the first requested day
  CHECK(snapshots_equal(db.seed, at15));
}

TEST_CASE("load_contact_db: empty files give empty snapshots") {
  TempDir dir("epinet_io_empty");
  write_file(dir.file("vertices.csv"), "id,detect_day,detect_type,gender,orientation\n");
  write_file(dir.file("edges.csv"), "id_a,id_b\n");
  const LoadedDb db = load_contact_db(dir.file("vertices.csv"), dir.file("edges.csv"), {10, 20});
  REQUIRE(db.snapshots.size() == 2);
  for (const auto& s : db.snapshots) {
    CHECK(s.detected.empty());
    CHECK(s.edges.empty());
  }

  // zero-byte files behave the same
  write_file(dir.file("v0.csv"), "");
  write_file(dir.file("e0.csv"), "");
  const LoadedDb db0 = load_contact_db(dir.file("v0.csv"), dir.file("e0.csv"), {});
  CHECK(db0.snapshots.empty());
}

TEST_CASE("load_contact_db: malformed inputs carry the line number") {
  TempDir dir("epinet_io_bad");

  write_file(dir.file("v.csv"),
             "id,detect_day,detect_type,gender,orientation\n"
             "1,10,RAND,M,HETERO\n"
             "2,20,CT,X,HETERO\n");
  write_file(dir.file("e.csv"), "id_a,id_b\n");
  try {
    load_contact_db(dir.file("v.csv"), dir.file("e.csv"), {30});
    FAIL("expected a ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find(":3") != std::string::npos);
  }

  write_file(dir.file("v2.csv"),
             "id,detect_day,detect_type,gender,orientation\n"
             "1,,RAND,M,HETERO\n");
  CHECK_THROWS_WITH_AS(load_contact_db(dir.file("v2.csv"), dir.file("e.csv"), {30}),
                       doctest::Contains("detection day missing"), ConfigError);

  write_file(dir.file("v3.csv"), kVerticesFixture);
  write_file(dir.file("e3.csv"), "id_a,id_b\n1,9\n");
  CHECK_THROWS_WITH_AS(load_contact_db(dir.file("v3.csv"), dir.file("e3.csv"), {30}),
                       doctest::Contains("unknown vertex id"), ConfigError);

  CHECK_THROWS_AS(load_contact_db(dir.file("missing.csv"), dir.file("e.csv"), {30}), ConfigError);
}

TEST_CASE("load_contact_db: extension columns are ignored, not rejected") {
  TempDir dir("epinet_io_ext");
  write_file(dir.file("v.csv"),
             "id,detect_day,detect_type,gender,orientation,birth_year,location\n"
             "1,10,RAND,M,HETERO,1960,havana\n");
  write_file(dir.file("e.csv"), "id_a,id_b\n");
  const LoadedDb db = load_contact_db(dir.file("v.csv"), dir.file("e.csv"), {15});
  CHECK(db.snapshots[0].detected.size() == 1);
}

TEST_CASE("snapshot export and reload are inverse; re-export is byte-identical") {
  TempDir dir("epinet_io_roundtrip");
  write_file(dir.file("vertices.csv"), kVerticesFixture);
  write_file(dir.file("edges.csv"), kEdgesFixture);
  const LoadedDb db =
      load_contact_db(dir.file("vertices.csv"), dir.file("edges.csv"), {10, 20, 30});

  const std::string out1 = dir.file("out1");
  export_snapshot_files(db.snapshots, out1);
  const SnapshotSequence back = load_snapshot_dir(out1);
  REQUIRE(back.size() == db.snapshots.size());
  for (std::size_t k = 0; k < back.size(); ++k) CHECK(snapshots_equal(back[k], db.snapshots[k]));

  const std::string out2 = dir.file("out2");
  export_snapshot_files(back, out2);
  for (int day : {10, 20, 30}) {
    const std::string name = "vertices_" + std::to_string(day) + ".csv";
    CHECK(read_file(out1 + "/" + name) == read_file(out2 + "/" + name));
    const std::string ename = "edges_" + std::to_string(day) + ".csv";
    CHECK(read_file(out1 + "/" + ename) == read_file(out2 + "/" + ename));
  }
}

TEST_CASE("export_snapshots: an empty trajectory writes a header-only summary") {
  TempDir dir("epinet_io_empty_traj");
  Theta theta;
  theta.n_initial_infected = 0;
  SimConfig cfg;
  cfg.m = 10;
  cfg.horizon = 0.0;
  cfg.snapshot_days.clear();  // no snapshots at all
  const Trajectory traj = run(theta, cfg);
  export_snapshots(traj, dir.file("out"));
  CHECK(read_file(dir.file("out/summary.csv")) ==
        "day,n_detected,n_random,n_traced,n_edges,n_components,largest_component,"
        "n_infected_total\n");
}

TEST_CASE("KeyValueConfig") {
  const KeyValueConfig kv = KeyValueConfig::parse_string(
      "# comment\n"
      "m = 500\n"
      "\n"
      "tau=0.25\n"
      "snapshot_days = 0, 50, 100\n"
      "name = toy run\n");
  CHECK(kv.get_int("m") == 500);
  CHECK(kv.get_real("tau") == 0.25);
  CHECK(kv.get_int_list("snapshot_days") == std::vector<int>{0, 50, 100});
  CHECK(kv.get_string("name") == "toy run");
  CHECK(kv.get_int("missing", 7) == 7);
  CHECK(kv.get_real("missing", 0.5) == 0.5);
  CHECK_THROWS_AS(kv.get_int("missing"), ConfigError);
  CHECK_THROWS_AS(kv.get_int("name"), ConfigError);
  CHECK_THROWS_AS(KeyValueConfig::parse_string("not a pair\n"), ConfigError);
}

TEST_CASE("config assembly") {
  const KeyValueConfig kv = KeyValueConfig::parse_string(
      "m = 800\n"
      "horizon = 400\n"
      "seed = 3\n"
      "theta.i0 = 50\n"
      "theta.alpha = 0.8\n"
      "theta.gamma = 0.002\n"
      "theta.beta = 0.001\n"
      "theta.lambda = 0.1\n"
      "theta.sigma = 0.01\n"
      "abc.n_particles = 12\n"
      "match.nu = 0.3\n"
      "prior.i0.kind = truncated_discrete_normal\n"
      "prior.i0.mean = 50\nprior.i0.sd = 5\nprior.i0.lo = 0\nprior.i0.hi = 1500\n"
      "prior.alpha.kind = truncated_normal\n"
      "prior.alpha.mean = 0.8\nprior.alpha.sd = 0.08\nprior.alpha.lo = 0\nprior.alpha.hi = 1\n"
      "prior.gamma.kind = gamma\nprior.gamma.mean = 0.002\nprior.gamma.sd = 0.0002\n"
      "prior.beta.kind = gamma\nprior.beta.mean = 0.001\nprior.beta.sd = 0.0001\n"
      "prior.lambda.kind = gamma\nprior.lambda.mean = 0.1\nprior.lambda.sd = 0.01\n"
      "prior.sigma.kind = truncated_normal\n"
      "prior.sigma.mean = 0.01\nprior.sigma.sd = 0.001\nprior.sigma.lo = 0\nprior.sigma.hi = 1\n");

  const SimConfig sim = sim_config_from(kv);
  CHECK(sim.m == 800);
  CHECK(sim.horizon == 400.0);
  CHECK(sim.seed == 3);
  // default subdivision: five equal steps of the horizon
  CHECK(sim.snapshot_days == std::vector<int>{0, 80, 160, 240, 320, 400});
  CHECK(sim.eta1 == 720.0);
  CHECK(sim.eta2 == 180.0);

  const Theta theta = theta_from(kv);
  CHECK(theta.n_initial_infected == 50);
  CHECK(theta.sigma == 0.01);

  const PriorSpec prior = prior_from(kv);
  REQUIRE(prior.size() == 6);
  CHECK(prior[0].kind == ParamPrior::Kind::TruncatedDiscreteNormal);
  CHECK(prior[2].kind == ParamPrior::Kind::GammaMeanSd);
  CHECK(prior[5].mean == 0.01);

  const AbcConfig abc = abc_config_from(kv);
  CHECK(abc.n_particles == 12);
  CHECK(abc.epsilon_initial == 0.8);

  const MatchParams match = match_params_from(kv);
  CHECK(match.nu == 0.3);
  CHECK(match.omega == 0.5);

  // invalid pieces are config errors
  KeyValueConfig bad = kv;
  bad.set("theta.alpha", "1.5");
  CHECK_THROWS_AS(theta_from(bad), ConfigError);
  bad = kv;
  bad.set("prior.i0.kind", "zipf");
  CHECK_THROWS_AS(prior_from(bad), ConfigError);
  bad = kv;
  bad.set("snapshot_days", "10,5");
  CHECK_THROWS_AS(sim_config_from(bad), ConfigError);
}

TEST_CASE("cli: simulate is deterministic and writes the advertised outputs") {
  TempDir dir("epinet_cli_sim");
  write_file(dir.file("sim.conf"),
             "m = 300\n"
             "horizon = 120\n"
             "snapshot_days = 0,60,120\n"
             "seed = 5\n"
             "theta.i0 = 30\n"
             "theta.alpha = 0.9\n"
             "theta.gamma = 0.01\n"
             "theta.beta = 0.01\n"
             "theta.lambda = 0.1\n"
             "theta.sigma = 0.02\n");

  const int rc1 = run_cli({"simulate", "--config", dir.file("sim.conf"), "--out", dir.file("a")});
  CHECK(rc1 == 0);
  const int rc2 = run_cli({"simulate", "--config", dir.file("sim.conf"), "--out", dir.file("b")});
  CHECK(rc2 == 0);

  for (const char* name : {"summary.csv", "counts.csv", "db_vertices.csv", "db_edges.csv",
                           "vertices_120.csv", "edges_120.csv"}) {
    CAPTURE(name);
    REQUIRE(fs::exists(dir.path / "a" / name));
    CHECK(read_file(dir.file(std::string("a/") + name)) ==
          read_file(dir.file(std::string("b/") + name)));
  }

  // summary rows satisfy n_random + n_traced = n_detected
  std::ifstream summary(dir.file("a/summary.csv"));
  std::string line;
  std::getline(summary, line);  // header
  while (std::getline(summary, line)) {
    int day, det, rnd, ct;
    long edges;
    std::sscanf(line.c_str(), "%d,%d,%d,%d,%ld", &day, &det, &rnd, &ct, &edges);
    CHECK(rnd + ct == det);
  }

  // match of a directory against itself with nu = 0 scores zero
  const SnapshotSequence self = load_snapshot_dir(dir.file("a"));
  CHECK(temporal_objective(self, self, 0.5, 0.0, 0.0) == 0.0);
  const int rc3 = run_cli({"match", "--a", dir.file("a"), "--b", dir.file("a"), "--nu", "0"});
  CHECK(rc3 == 0);
}

TEST_CASE("cli: error paths") {
  CHECK(run_cli({"simulate", "--config", "/nonexistent/x.conf", "--out", "/tmp/never"}) == 1);
  CHECK(run_cli({"simulate", "--bogus-flag"}) == 1);
  CHECK(run_cli({}) == 1);
  CHECK(run_cli({"match", "--a", "/nonexistent", "--b", "/nonexistent"}) == 1);
}
