#include "epinet/simulator.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace epinet {

Theta Theta::from_vector(const std::vector<double>& v) {
  if (v.size() != 6) throw std::invalid_argument("theta vector must have 6 entries");
  Theta t;
  t.n_initial_infected = static_cast<int>(std::lround(v[0]));
  t.alpha = v[1];
  t.gamma = v[2];
  t.beta = v[3];
  t.lambda = v[4];
  t.sigma = v[5];
  return t;
}

std::vector<double> Theta::to_vector() const {
  return {static_cast<double>(n_initial_infected), alpha, gamma, beta, lambda, sigma};
}

void Theta::validate() const {
  if (n_initial_infected < 0) throw std::invalid_argument("|I0| must be nonnegative");
  if (alpha < 0.0 || alpha > 1.0) throw std::invalid_argument("alpha must lie in [0,1]");
  if (sigma < 0.0 || sigma > 1.0) throw std::invalid_argument("sigma must lie in [0,1]");
  if (gamma < 0.0 || beta < 0.0 || lambda < 0.0)
    throw std::invalid_argument("rates must be nonnegative");
}

void SimConfig::validate() const {
  if (m < 1) throw std::invalid_argument("population size must be at least 1");
  if (!(eta1 > eta2) || eta2 < 0.0) throw std::invalid_argument("need eta1 > eta2 >= 0");
  if (horizon < start_day) throw std::invalid_argument("horizon before start day");
  if (degree_exponent <= 1.0) throw std::invalid_argument("degree exponent must exceed 1");
  int prev = std::numeric_limits<int>::min();
  for (int d : snapshot_days) {
    if (d < start_day || static_cast<double>(d) > horizon)
      throw std::invalid_argument("snapshot day outside [start_day, horizon]");
    if (d <= prev) throw std::invalid_argument("snapshot days must be ascending");
    prev = d;
  }
}

bool sexually_compatible(const VertexLabel& a, const VertexLabel& b) {
  if (a.gender != b.gender) return true;  // any male-female pair
  if (a.gender == Gender::Female) return false;
  return a.orientation == Orientation::Bisexual && b.orientation == Orientation::Bisexual;
}

namespace {

int windowed_detected_neighbors(const EvolvingGraph& g, int i, double day, const SimConfig& cfg) {
  int n = 0;
  for (const auto& [j, first_day] : g.contacts(i)) {
    const auto& x = g.label(j);
    if (x.state != SirState::Removed) continue;
    const double td = *x.detection_time;
    if (td >= day - cfg.eta1 && td <= day - cfg.eta2) ++n;
  }
  return n;
}

int detected_neighbors(const EvolvingGraph& g, int i) {
  int n = 0;
  for (const auto& [j, first_day] : g.contacts(i))
    if (g.label(j).state == SirState::Removed) ++n;
  return n;
}

}  // namespace

double detection_rate(const EvolvingGraph& g, int i, double day, const Theta& theta,
                      const SimConfig& cfg) {
  if (g.label(i).state != SirState::Infective)
    throw std::logic_error("detection rate queried for a non-infective");
  return theta.gamma + theta.beta * windowed_detected_neighbors(g, i, day, cfg);
}

std::optional<int> choose_partner(const EvolvingGraph& g, int i, double alpha, double tau,
                                  RngStream& rng) {
  if (g.label(i).state == SirState::Removed)
    throw std::logic_error("removed vertices make no contacts");

  int last = -1;
  if (auto lp = g.last_partner(i)) last = *lp;
  if (last >= 0 && g.label(last).state != SirState::Removed && rng.uniform() < alpha)
    return last;

  const VertexLabel& xi = g.label(i);
  std::array<const std::vector<int>*, 2> classes{nullptr, nullptr};
  if (xi.gender == Gender::Female) {
    classes = {&g.hetero_males(), &g.bisexual_males()};
  } else if (xi.orientation == Orientation::Hetero) {
    classes = {&g.females(), nullptr};
  } else {
    classes = {&g.females(), &g.bisexual_males()};
  }

  auto weight = [&](int k) {
    return (1.0 - tau) * g.degree(k) + tau * g.label(k).hidden_degree;
  };
  auto admissible = [&](int k) {
    return k != i && k != last && g.label(k).state != SirState::Removed;
  };

  double total = 0.0;
  long count = 0;
  for (const auto* cls : classes) {
    if (!cls) continue;
    for (int k : *cls) {
      if (!admissible(k)) continue;
      total += weight(k);
      ++count;
    }
  }
  if (count == 0) return std::nullopt;

  if (total > 0.0) {
    const double x = rng.uniform() * total;
    double acc = 0.0;
    int found = -1;
    for (const auto* cls : classes) {
      if (!cls) continue;
      for (int k : *cls) {
        if (!admissible(k)) continue;
        acc += weight(k);
        found = k;
        if (x < acc) return k;
      }
    }
    return found;  // x landed on the rounding tail
  }
  // all weights zero (possible only for tau = 0 with isolated candidates)
  long target = static_cast<long>(rng.index(static_cast<std::size_t>(count)));
  for (const auto* cls : classes) {
    if (!cls) continue;
    for (int k : *cls) {
      if (!admissible(k)) continue;
      if (target-- == 0) return k;
    }
  }
  return std::nullopt;  // unreachable
}

bool infection_occurs(const VertexLabel& infective, const VertexLabel& susceptible, double sigma,
                      RngStream& rng) {
  if (infective.gender == Gender::Female && susceptible.gender == Gender::Female) return false;
  return rng.uniform() < sigma;
}

double rate_bound(const EvolvingGraph& g, const Theta& theta) {
  const auto& inf = g.infectives();
  if (inf.empty()) throw std::logic_error("rate bound of a state without infectives");
  double rho = theta.lambda * static_cast<double>(inf.size());
  for (int i : inf) rho += theta.gamma + theta.beta * detected_neighbors(g, i);
  return rho;
}

StepResult step_until(EvolvingGraph& g, const Theta& theta, const SimConfig& cfg, double day,
                      double limit, RngStream& rng) {
  if (g.infectives().empty()) throw std::logic_error("step with no infectives");

  const double rho = rate_bound(g, theta);
  const double t = day + rng.exponential(rho);
  if (t > limit) return {limit, {}};

  StepResult out;
  out.day = t;

  const std::vector<int> inf = g.infectives();  // copy: selection must precede mutation
  const double u = rng.uniform() * rho;
  double acc = 0.0;

  // contact proposals, exact rate lambda per infective
  for (int i : inf) {
    acc += theta.lambda;
    if (u < acc) {
      const auto partner = choose_partner(g, i, theta.alpha, cfg.tau, rng);
      if (!partner) {
        out.events.push_back({t, EventKind::Null, i, -1});
        return out;
      }
      const int j = *partner;
      g.add_contact_edge(i, j, t);
      out.events.push_back({t, EventKind::Contact, i, j});
      if (g.label(j).state == SirState::Susceptible &&
          infection_occurs(g.label(i), g.label(j), theta.sigma, rng)) {
        g.infect(j, t);
        out.events.push_back({t, EventKind::Infection, i, j});
      }
      return out;
    }
  }
  // detection proposals, exact windowed rates
  for (int i : inf) {
    const int w = windowed_detected_neighbors(g, i, t, cfg);
    const double r = theta.gamma + theta.beta * w;
    acc += r;
    if (u < acc) {
      const bool traced = rng.uniform() * r < theta.beta * w;
      g.remove(i, t, traced ? DetectionType::ContactTraced : DetectionType::Random);
      out.events.push_back(
          {t, traced ? EventKind::DetectionTraced : EventKind::DetectionRandom, i, -1});
      return out;
    }
  }
  // thinning rejection
  out.events.push_back({t, EventKind::Null, -1, -1});
  return out;
}

StepResult step(EvolvingGraph& g, const Theta& theta, const SimConfig& cfg, double day,
                RngStream& rng) {
  return step_until(g, theta, cfg, day, cfg.horizon, rng);
}

Trajectory run(const Theta& theta, const SimConfig& cfg, RngStream& rng,
               const EvolvingGraph* initial) {
  theta.validate();
  cfg.validate();

  EvolvingGraph g = [&] {
    if (initial) return *initial;
    RngStream init_rng = rng.derive(0x1717);
    return init_population(cfg.m, cfg.degree_exponent, cfg.female_frac, cfg.bisexual_frac,
                           theta.n_initial_infected, init_rng);
  }();
  RngStream ev_rng = rng.derive(0x57e9);

  Trajectory traj{.events = {}, .snapshots = {}, .counts = {}, .graph = std::move(g)};
  EvolvingGraph& graph = traj.graph;

  int n_random = 0, n_traced = 0;
  for (int i = 0; i < graph.size(); ++i) {
    const auto& x = graph.label(i);
    if (x.detection_type == DetectionType::Random) ++n_random;
    if (x.detection_type == DetectionType::ContactTraced) ++n_traced;
  }
  auto sample_counts = [&](double day) {
    traj.counts.push_back({day, graph.susceptible_count(),
                           static_cast<int>(graph.infectives().size()), graph.removed_count(),
                           n_random, n_traced});
  };

  double day = cfg.start_day;
  sample_counts(day);

  const auto& days = cfg.snapshot_days;
  std::size_t snap_i = 0;

  while (day < cfg.horizon && !graph.infectives().empty()) {
    double limit = cfg.horizon;
    if (snap_i < days.size())
      limit = std::min(limit, static_cast<double>(days[snap_i]));

    const StepResult sr = step_until(graph, theta, cfg, day, limit, ev_rng);
    day = sr.day;
    if (sr.events.empty()) {
      if (snap_i < days.size() && day == static_cast<double>(days[snap_i])) {
        traj.snapshots.push_back(observable_network(graph, days[snap_i]));
        ++snap_i;
      }
      continue;
    }
    for (const Event& e : sr.events) {
      traj.events.push_back(e);
      switch (e.kind) {
        case EventKind::Infection:
          sample_counts(e.day);
          break;
        case EventKind::DetectionRandom:
          ++n_random;
          sample_counts(e.day);
          break;
        case EventKind::DetectionTraced:
          ++n_traced;
          sample_counts(e.day);
          break;
        default:
          break;
      }
    }
  }

  // the state is frozen from here on; remaining snapshot days see it as is
  for (; snap_i < days.size(); ++snap_i)
    traj.snapshots.push_back(observable_network(graph, days[snap_i]));

  return traj;
}

Trajectory run(const Theta& theta, const SimConfig& cfg) {
  RngStream root(cfg.seed);
  return run(theta, cfg, root, nullptr);
}

const CountsSample& counts_at(const Trajectory& traj, double day) {
  const auto& c = traj.counts;
  if (c.empty()) throw std::logic_error("trajectory without counts");
  std::size_t lo = 0;
  for (std::size_t k = 0; k < c.size(); ++k) {
    if (c[k].day <= day) lo = k;
    else break;
  }
  return c[lo];
}

}  // namespace epinet
