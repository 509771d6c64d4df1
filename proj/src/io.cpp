#include "epinet/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unordered_set>

namespace fs = std::filesystem;

namespace epinet {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

// shortest round-trip formatting
std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s, const std::string& where) {
  const std::string t = trim(s);
  if (t.empty()) throw ConfigError(where + ": missing numeric value");
  double v = 0.0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (res.ec != std::errc() || res.ptr != t.data() + t.size())
    throw ConfigError(where + ": bad numeric value '" + t + "'");
  return v;
}

int parse_int(const std::string& s, const std::string& where) {
  const std::string t = trim(s);
  if (t.empty()) throw ConfigError(where + ": missing integer value");
  int v = 0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (res.ec != std::errc() || res.ptr != t.data() + t.size())
    throw ConfigError(where + ": bad integer value '" + t + "'");
  return v;
}

struct DbVertex {
  int id = 0;
  double detect_day = 0.0;
  DetectionType type = DetectionType::Random;
  Gender gender = Gender::Male;
  Orientation orientation = Orientation::Hetero;
};

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

std::vector<DbVertex> read_vertices_csv(const std::string& path) {
  const auto lines = read_lines(path);
  std::vector<DbVertex> out;
  for (std::size_t ln = 0; ln < lines.size(); ++ln) {
    const std::string where = path + ":" + std::to_string(ln + 1);
    const std::string line = trim(lines[ln]);
    if (line.empty()) continue;
    if (ln == 0) continue;  // header
    const auto cols = split(line, ',');
    if (cols.size() < 5) throw ConfigError(where + ": expected 5 columns");
    DbVertex v;
    v.id = parse_int(cols[0], where);
    if (trim(cols[1]).empty()) throw ConfigError(where + ": detection day missing");
    v.detect_day = parse_double(cols[1], where);
    const std::string type = trim(cols[2]);
    if (type == "RAND")
      v.type = DetectionType::Random;
    else if (type == "CT")
      v.type = DetectionType::ContactTraced;
    else
      throw ConfigError(where + ": detect_type must be RAND or CT");
    const std::string gender = trim(cols[3]);
    if (gender == "M")
      v.gender = Gender::Male;
    else if (gender == "F")
      v.gender = Gender::Female;
    else
      throw ConfigError(where + ": gender must be M or F");
    const std::string ori = trim(cols[4]);
    if (ori == "HETERO")
      v.orientation = Orientation::Hetero;
    else if (ori == "BI")
      v.orientation = Orientation::Bisexual;
    else
      throw ConfigError(where + ": orientation must be HETERO or BI");
    out.push_back(v);
  }
  return out;
}

std::vector<std::pair<int, int>> read_edges_csv(const std::string& path,
                                                const std::unordered_set<int>& known) {
  const auto lines = read_lines(path);
  std::vector<std::pair<int, int>> out;
  for (std::size_t ln = 0; ln < lines.size(); ++ln) {
    const std::string where = path + ":" + std::to_string(ln + 1);
    const std::string line = trim(lines[ln]);
    if (line.empty()) continue;
    if (ln == 0) continue;  // header
    const auto cols = split(line, ',');
    if (cols.size() < 2) throw ConfigError(where + ": expected 2 columns");
    int a = parse_int(cols[0], where);
    int b = parse_int(cols[1], where);
    if (a == b) throw ConfigError(where + ": self-loop");
    if (!known.count(a) || !known.count(b))
      throw ConfigError(where + ": edge references an unknown vertex id");
    if (a > b) std::swap(a, b);
    out.emplace_back(a, b);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

VertexLabel db_vertex_label(const DbVertex& v) {
  VertexLabel x;
  x.gender = v.gender;
  x.orientation = v.orientation;
  x.state = SirState::Removed;
  x.detection_time = v.detect_day;
  x.detection_type = v.type;
  x.infection_time = v.detect_day;
  x.hidden_degree = 1;
  return x;
}

Snapshot snapshot_from_db(const std::vector<DbVertex>& vertices,
                          const std::vector<std::pair<int, int>>& edges, int day) {
  Snapshot s;
  s.day = day;
  std::unordered_set<int> in;
  for (const auto& v : vertices) {
    if (v.detect_day <= static_cast<double>(day)) {
      s.detected.emplace_back(v.id, db_vertex_label(v));
      in.insert(v.id);
    }
  }
  std::sort(s.detected.begin(), s.detected.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  for (const auto& [a, b] : edges)
    if (in.count(a) && in.count(b)) s.edges.emplace_back(a, b);
  return s;
}

const char* detection_code(DetectionType t) {
  return t == DetectionType::ContactTraced ? "CT" : "RAND";
}

void write_vertices_csv(const Snapshot& s, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "id,detect_day,detect_type,gender,orientation\n";
  for (const auto& [id, x] : s.detected) {
    out << id << ',' << format_double(*x.detection_time) << ',' << detection_code(*x.detection_type)
        << ',' << (x.gender == Gender::Female ? 'F' : 'M') << ','
        << (x.orientation == Orientation::Bisexual ? "BI" : "HETERO") << '\n';
  }
}

void write_edges_csv(const Snapshot& s, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "id_a,id_b\n";
  for (const auto& [a, b] : s.edges) out << a << ',' << b << '\n';
}

}  // namespace

LoadedDb load_contact_db(const std::string& vertices_path, const std::string& edges_path,
                         const std::vector<int>& days) {
  const auto vertices = read_vertices_csv(vertices_path);
  std::unordered_set<int> ids;
  for (const auto& v : vertices) {
    if (!ids.insert(v.id).second)
      throw ConfigError(vertices_path + ": duplicate vertex id " + std::to_string(v.id));
  }
  const auto edges = read_edges_csv(edges_path, ids);

  LoadedDb db;
  for (int d : days) db.snapshots.push_back(snapshot_from_db(vertices, edges, d));
  db.seed = days.empty() ? Snapshot{} : db.snapshots.front();
  return db;
}

SnapshotSequence load_snapshot_dir(const std::string& dir) {
  if (!fs::is_directory(dir)) throw ConfigError(dir + " is not a directory");
  std::vector<int> days;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("vertices_", 0) == 0 && name.size() > 13 &&
        name.substr(name.size() - 4) == ".csv") {
      days.push_back(parse_int(name.substr(9, name.size() - 13), name));
    }
  }
  std::sort(days.begin(), days.end());
  SnapshotSequence out;
  for (int d : days) {
    const std::string vp = dir + "/vertices_" + std::to_string(d) + ".csv";
    const std::string ep = dir + "/edges_" + std::to_string(d) + ".csv";
    if (!fs::exists(ep)) throw ConfigError(ep + " missing for snapshot day " + std::to_string(d));
    const auto vertices = read_vertices_csv(vp);
    std::unordered_set<int> ids;
    for (const auto& v : vertices) ids.insert(v.id);
    const auto edges = read_edges_csv(ep, ids);
    out.push_back(snapshot_from_db(vertices, edges, d));
  }
  return out;
}

void export_snapshot_files(const SnapshotSequence& snaps, const std::string& dir) {
  fs::create_directories(dir);
  for (const auto& s : snaps) {
    write_vertices_csv(s, dir + "/vertices_" + std::to_string(s.day) + ".csv");
    write_edges_csv(s, dir + "/edges_" + std::to_string(s.day) + ".csv");
  }
}

void export_snapshots(const Trajectory& traj, const std::string& dir) {
  fs::create_directories(dir);
  export_snapshot_files(traj.snapshots, dir);
  std::ofstream out(dir + "/summary.csv");
  if (!out) throw std::runtime_error("cannot write " + dir + "/summary.csv");
  out << "day,n_detected,n_random,n_traced,n_edges,n_components,largest_component,"
         "n_infected_total\n";
  for (const auto& s : traj.snapshots) {
    const GraphStats st = graph_stats(s);
    const auto& c = counts_at(traj, static_cast<double>(s.day));
    out << s.day << ',' << st.n_detected << ',' << st.n_random << ',' << st.n_traced << ','
        << st.n_edges << ',' << st.n_components << ',' << st.largest_component << ','
        << (c.infective + c.removed) << '\n';
  }
}

void write_contact_db(const Snapshot& net, const std::string& vertices_path,
                      const std::string& edges_path) {
  write_vertices_csv(net, vertices_path);
  write_edges_csv(net, edges_path);
}

void write_counts_csv(const Trajectory& traj, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "day,susceptible,infective,removed,detected_random,detected_traced\n";
  for (const auto& c : traj.counts) {
    out << format_double(c.day) << ',' << c.susceptible << ',' << c.infective << ',' << c.removed
        << ',' << c.detected_random << ',' << c.detected_traced << '\n';
  }
}

namespace {
const char* const kParamNames[6] = {"i0", "alpha", "gamma", "beta", "lambda", "sigma"};
}

void write_diagnostics_csv(const std::vector<IterationDiag>& diags, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "iteration,epsilon,attempts,acceptance_rate,mean_distance,max_distance";
  for (const char* n : kParamNames) out << ",mean_" << n << ",sd_" << n;
  out << '\n';
  for (const auto& d : diags) {
    out << d.iteration << ',' << format_double(d.epsilon) << ',' << d.attempts << ','
        << format_double(d.acceptance_rate) << ',' << format_double(d.mean_distance) << ','
        << format_double(d.max_distance);
    for (std::size_t c = 0; c < d.mean.size(); ++c)
      out << ',' << format_double(d.mean[c]) << ',' << format_double(d.sd[c]);
    out << '\n';
  }
}

void write_posterior_csv(const std::vector<Particle>& pop, const std::string& path) {
  const auto [mean, sd] = posterior_summary(pop);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "parameter,mean,sd\n";
  for (std::size_t c = 0; c < mean.size(); ++c) {
    const std::string name = c < 6 ? kParamNames[c] : "p" + std::to_string(c);
    out << name << ',' << format_double(mean[c]) << ',' << format_double(sd[c]) << '\n';
  }
}

void write_particles_csv(const std::vector<Particle>& pop, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "i0,alpha,gamma,beta,lambda,sigma,weight,distance\n";
  for (const auto& p : pop) {
    for (std::size_t c = 0; c < p.theta.size(); ++c) out << format_double(p.theta[c]) << ',';
    out << format_double(p.weight) << ',' << format_double(p.distance) << '\n';
  }
}

void write_curves_csv(const CurveStats& c, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "day,mean_infective,sd_infective,mean_detected,sd_detected,mean_random,sd_random,"
         "mean_traced,sd_traced\n";
  for (std::size_t k = 0; k < c.days.size(); ++k) {
    out << c.days[k] << ',' << format_double(c.mean_infective[k]) << ','
        << format_double(c.sd_infective[k]) << ',' << format_double(c.mean_detected[k]) << ','
        << format_double(c.sd_detected[k]) << ',' << format_double(c.mean_random[k]) << ','
        << format_double(c.sd_random[k]) << ',' << format_double(c.mean_traced[k]) << ','
        << format_double(c.sd_traced[k]) << '\n';
  }
}

KeyValueConfig KeyValueConfig::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_string(ss.str());
}

KeyValueConfig KeyValueConfig::parse_string(const std::string& text) {
  KeyValueConfig kv;
  std::istringstream in(text);
  std::string line;
  int ln = 0;
  while (std::getline(in, line)) {
    ++ln;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(ln) + ": expected key=value");
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key.empty()) throw ConfigError("config line " + std::to_string(ln) + ": empty key");
    kv.values_[key] = value;
  }
  return kv;
}

std::string KeyValueConfig::get_string(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("missing config key '" + key + "'");
  return it->second;
}

std::string KeyValueConfig::get_string(const std::string& key, const std::string& fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double KeyValueConfig::get_real(const std::string& key) const {
  return parse_double(get_string(key), "config key '" + key + "'");
}

double KeyValueConfig::get_real(const std::string& key, double fallback) const {
  return has(key) ? get_real(key) : fallback;
}

int KeyValueConfig::get_int(const std::string& key) const {
  return parse_int(get_string(key), "config key '" + key + "'");
}

int KeyValueConfig::get_int(const std::string& key, int fallback) const {
  return has(key) ? get_int(key) : fallback;
}

std::vector<int> KeyValueConfig::get_int_list(const std::string& key) const {
  std::vector<int> out;
  for (const auto& part : split(get_string(key), ','))
    out.push_back(parse_int(part, "config key '" + key + "'"));
  return out;
}

SimConfig sim_config_from(const KeyValueConfig& kv) {
  SimConfig cfg;
  cfg.m = kv.get_int("m", cfg.m);
  cfg.start_day = kv.get_real("start_day", cfg.start_day);
  cfg.horizon = kv.get_real("horizon", cfg.horizon);
  cfg.tau = kv.get_real("tau", cfg.tau);
  cfg.eta1 = kv.get_real("eta1", cfg.eta1);
  cfg.eta2 = kv.get_real("eta2", cfg.eta2);
  cfg.degree_exponent = kv.get_real("degree_exponent", cfg.degree_exponent);
  cfg.female_frac = kv.get_real("female_frac", cfg.female_frac);
  cfg.bisexual_frac = kv.get_real("bisexual_frac", cfg.bisexual_frac);
  cfg.seed = static_cast<std::uint64_t>(kv.get_int("seed", 0));
  if (kv.has("snapshot_days")) {
    cfg.snapshot_days = kv.get_int_list("snapshot_days");
  } else {
    // default subdivision: five equal steps of the horizon
    const double span = cfg.horizon - cfg.start_day;
    for (int k = 0; k <= 5; ++k)
      cfg.snapshot_days.push_back(static_cast<int>(std::lround(cfg.start_day + span * k / 5.0)));
  }
  try {
    cfg.validate();
  } catch (const std::exception& e) {
    throw ConfigError(std::string("invalid simulation config: ") + e.what());
  }
  return cfg;
}

Theta theta_from(const KeyValueConfig& kv) {
  Theta t;
  t.n_initial_infected = kv.get_int("theta.i0");
  t.alpha = kv.get_real("theta.alpha");
  t.gamma = kv.get_real("theta.gamma");
  t.beta = kv.get_real("theta.beta");
  t.lambda = kv.get_real("theta.lambda");
  t.sigma = kv.get_real("theta.sigma");
  try {
    t.validate();
  } catch (const std::exception& e) {
    throw ConfigError(std::string("invalid theta: ") + e.what());
  }
  return t;
}

PriorSpec prior_from(const KeyValueConfig& kv) {
  PriorSpec prior;
  for (const char* name : kParamNames) {
    const std::string base = std::string("prior.") + name;
    ParamPrior p;
    const std::string kind = kv.get_string(base + ".kind");
    if (kind == "truncated_normal")
      p.kind = ParamPrior::Kind::TruncatedNormal;
    else if (kind == "truncated_discrete_normal")
      p.kind = ParamPrior::Kind::TruncatedDiscreteNormal;
    else if (kind == "gamma")
      p.kind = ParamPrior::Kind::GammaMeanSd;
    else
      throw ConfigError(base + ".kind must be truncated_normal, truncated_discrete_normal or gamma");
    p.mean = kv.get_real(base + ".mean");
    p.sd = kv.get_real(base + ".sd");
    if (p.kind != ParamPrior::Kind::GammaMeanSd) {
      p.lo = kv.get_real(base + ".lo");
      p.hi = kv.get_real(base + ".hi");
    }
    try {
      p.validate();
    } catch (const std::exception& e) {
      throw ConfigError("invalid " + base + ": " + e.what());
    }
    prior.push_back(p);
  }
  return prior;
}

AbcConfig abc_config_from(const KeyValueConfig& kv) {
  AbcConfig cfg;
  cfg.n_particles = kv.get_int("abc.n_particles", cfg.n_particles);
  cfg.epsilon_initial = kv.get_real("abc.epsilon_initial", cfg.epsilon_initial);
  cfg.stop_kappa = kv.get_real("abc.kappa", cfg.stop_kappa);
  cfg.max_sim_attempts = kv.get_int("abc.max_sim_attempts", cfg.max_sim_attempts);
  cfg.max_ancestor_retries = kv.get_int("abc.max_ancestor_retries", cfg.max_ancestor_retries);
  cfg.max_iterations = kv.get_int("abc.max_iterations", cfg.max_iterations);
  cfg.n_threads = kv.get_int("abc.threads", cfg.n_threads);
  try {
    cfg.validate();
  } catch (const std::exception& e) {
    throw ConfigError(std::string("invalid abc config: ") + e.what());
  }
  return cfg;
}

MatchParams match_params_from(const KeyValueConfig& kv) {
  MatchParams p;
  p.nu = kv.get_real("match.nu", p.nu);
  p.xi = kv.get_real("match.xi", p.xi);
  p.omega = kv.get_real("match.omega", p.omega);
  p.pad_cost = kv.get_real("match.pad_cost", p.pad_cost);
  p.max_iter = kv.get_int("match.max_iter", p.max_iter);
  p.tol = kv.get_real("match.tol", p.tol);
  return p;
}

}  // namespace epinet
