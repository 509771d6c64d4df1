#include "epinet/population.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace epinet {

namespace {

void validate_label(const VertexLabel& x, int i) {
  const auto where = "vertex " + std::to_string(i);
  if (x.hidden_degree < 1) throw std::invalid_argument(where + ": hidden_degree < 1");
  if (x.gender == Gender::Female && x.orientation == Orientation::Bisexual)
    throw std::invalid_argument(where + ": bisexual females are not modelled");
  const bool detected = x.detection_time.has_value() && x.detection_type.has_value();
  if ((x.state == SirState::Removed) != detected)
    throw std::invalid_argument(where + ": detection fields must be present iff removed");
  if (x.detection_time.has_value() != x.detection_type.has_value())
    throw std::invalid_argument(where + ": detection_time and detection_type must come together");
  const bool infected = x.state == SirState::Infective || x.state == SirState::Removed;
  if (infected != x.infection_time.has_value())
    throw std::invalid_argument(where + ": infection_time must be present iff ever infected");
}

// Inverse-CDF table for P(d = k) proportional to k^(-exponent), k = 1..d_max.
std::vector<double> power_law_cdf(int d_max, double exponent) {
  std::vector<double> cdf(static_cast<std::size_t>(d_max));
  double sum = 0.0;
  for (int k = 1; k <= d_max; ++k) {
    sum += std::pow(static_cast<double>(k), -exponent);
    cdf[static_cast<std::size_t>(k - 1)] = sum;
  }
  for (double& c : cdf) c /= sum;
  cdf.back() = 1.0;
  return cdf;
}

int sample_power_law(const std::vector<double>& cdf, RngStream& rng) {
  const double u = rng.uniform();
  const auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
  return static_cast<int>(it - cdf.begin()) + 1;
}

}  // namespace

EvolvingGraph::EvolvingGraph(std::vector<VertexLabel> labels) : labels_(std::move(labels)) {
  init_indexes();
}

EvolvingGraph::EvolvingGraph(std::vector<VertexLabel> labels,
                             const std::vector<std::tuple<int, int, double>>& edges)
    : labels_(std::move(labels)) {
  init_indexes();
  for (const auto& [i, j, day] : edges) {
    check_vertex(i);
    check_vertex(j);
    if (i == j) throw std::invalid_argument("self-loop in initial edge set");
    for (int v : {i, j}) {
      const auto& x = labels_[static_cast<std::size_t>(v)];
      if (x.detection_time && day > *x.detection_time)
        throw std::invalid_argument("initial edge later than endpoint detection");
    }
    auto [it_i, new_i] = adj_[static_cast<std::size_t>(i)].try_emplace(j, day);
    if (!new_i) throw std::invalid_argument("duplicate edge in initial edge set");
    adj_[static_cast<std::size_t>(j)].emplace(i, day);
    ++edge_count_;
  }
}

void EvolvingGraph::init_indexes() {
  const int m = size();
  adj_.assign(static_cast<std::size_t>(m), {});
  last_partner_.assign(static_cast<std::size_t>(m), -1);
  infective_pos_.assign(static_cast<std::size_t>(m), -1);
  for (int i = 0; i < m; ++i) {
    const auto& x = labels_[static_cast<std::size_t>(i)];
    validate_label(x, i);
    switch (x.state) {
      case SirState::Susceptible:
        ++susceptible_count_;
        break;
      case SirState::Infective:
        infective_pos_[static_cast<std::size_t>(i)] = static_cast<int>(infectives_.size());
        infectives_.push_back(i);
        break;
      case SirState::Removed:
        ++removed_count_;
        break;
    }
    if (x.gender == Gender::Female)
      females_.push_back(i);
    else if (x.orientation == Orientation::Bisexual)
      bisexual_males_.push_back(i);
    else
      hetero_males_.push_back(i);
  }
}

void EvolvingGraph::check_vertex(int i) const {
  if (i < 0 || i >= size()) throw std::out_of_range("vertex id out of range");
}

void EvolvingGraph::add_contact_edge(int i, int j, double day) {
  check_vertex(i);
  check_vertex(j);
  if (i == j) throw std::logic_error("contact of a vertex with itself");
  if (label(i).state == SirState::Removed || label(j).state == SirState::Removed)
    throw std::logic_error("contact involving a removed vertex");
  auto& ai = adj_[static_cast<std::size_t>(i)];
  auto it = ai.find(j);
  if (it == ai.end()) {
    ai.emplace(j, day);
    adj_[static_cast<std::size_t>(j)].emplace(i, day);
    ++edge_count_;
  } else if (day < it->second) {
    it->second = day;
    adj_[static_cast<std::size_t>(j)][i] = day;
  }
  last_partner_[static_cast<std::size_t>(i)] = j;
  last_partner_[static_cast<std::size_t>(j)] = i;
}

void EvolvingGraph::infect(int i, double day) {
  check_vertex(i);
  auto& x = labels_[static_cast<std::size_t>(i)];
  if (x.state != SirState::Susceptible) throw std::logic_error("infection of a non-susceptible");
  x.state = SirState::Infective;
  x.infection_time = day;
  --susceptible_count_;
  infective_pos_[static_cast<std::size_t>(i)] = static_cast<int>(infectives_.size());
  infectives_.push_back(i);
}

void EvolvingGraph::remove(int i, double day, DetectionType type) {
  check_vertex(i);
  auto& x = labels_[static_cast<std::size_t>(i)];
  if (x.state != SirState::Infective) throw std::logic_error("removal of a non-infective");
  x.state = SirState::Removed;
  x.detection_time = day;
  x.detection_type = type;
  const int pos = infective_pos_[static_cast<std::size_t>(i)];
  const int back = infectives_.back();
  infectives_[static_cast<std::size_t>(pos)] = back;
  infective_pos_[static_cast<std::size_t>(back)] = pos;
  infectives_.pop_back();
  infective_pos_[static_cast<std::size_t>(i)] = -1;
  ++removed_count_;
}

EvolvingGraph init_population(int m, double degree_exponent, double female_frac,
                              double bisexual_frac, int n_initial_infected, RngStream& rng) {
  if (m < 1) throw std::invalid_argument("population size must be at least 1");
  if (degree_exponent <= 1.0) throw std::invalid_argument("degree exponent must exceed 1");
  if (female_frac < 0.0 || female_frac > 1.0 || bisexual_frac < 0.0 || bisexual_frac > 1.0)
    throw std::invalid_argument("fractions must lie in [0,1]");
  if (bisexual_frac >= 1.0 - female_frac)
    throw std::invalid_argument("bisexual fraction must be smaller than the male fraction");
  if (n_initial_infected < 0 || n_initial_infected > m)
    throw std::invalid_argument("initial infectives must lie in [0, M]");

  const auto cdf = power_law_cdf(std::max(1, m - 1), degree_exponent);
  const double p_bisexual = bisexual_frac / (1.0 - female_frac);

  std::vector<VertexLabel> labels(static_cast<std::size_t>(m));
  for (auto& x : labels) {
    if (rng.uniform() < female_frac) {
      x.gender = Gender::Female;
    } else {
      x.gender = Gender::Male;
      x.orientation =
          rng.uniform() < p_bisexual ? Orientation::Bisexual : Orientation::Hetero;
    }
    x.hidden_degree = sample_power_law(cdf, rng);
  }

  // partial Fisher-Yates for the uniformly chosen initial infectives
  std::vector<int> idx(static_cast<std::size_t>(m));
  std::iota(idx.begin(), idx.end(), 0);
  for (int k = 0; k < n_initial_infected; ++k) {
    const auto r = k + static_cast<int>(rng.index(static_cast<std::size_t>(m - k)));
    std::swap(idx[static_cast<std::size_t>(k)], idx[static_cast<std::size_t>(r)]);
    auto& x = labels[static_cast<std::size_t>(idx[static_cast<std::size_t>(k)])];
    x.state = SirState::Infective;
    x.infection_time = 0.0;
  }

  return EvolvingGraph(std::move(labels));
}

EvolvingGraph init_population(int m, double degree_exponent, double female_frac,
                              double bisexual_frac, int n_initial_infected, std::uint64_t seed) {
  RngStream rng(seed);
  return init_population(m, degree_exponent, female_frac, bisexual_frac, n_initial_infected, rng);
}

EvolvingGraph seed_population(int m, const Snapshot& seed, double degree_exponent,
                              double female_frac, double bisexual_frac,
                              int n_initial_infected, RngStream& rng) {
  const int k = static_cast<int>(seed.detected.size());
  if (k > m) throw std::invalid_argument("seed network larger than population size");
  if (n_initial_infected < 0 || n_initial_infected > m - k)
    throw std::invalid_argument("not enough non-detected vertices for initial infectives");
  if (degree_exponent <= 1.0) throw std::invalid_argument("degree exponent must exceed 1");
  if (bisexual_frac >= 1.0 - female_frac)
    throw std::invalid_argument("bisexual fraction must be smaller than the male fraction");

  const auto cdf = power_law_cdf(std::max(1, m - 1), degree_exponent);
  const double p_bisexual = bisexual_frac / (1.0 - female_frac);

  std::vector<VertexLabel> labels(static_cast<std::size_t>(m));
  std::unordered_map<int, int> to_index;
  to_index.reserve(seed.detected.size());
  for (int i = 0; i < k; ++i) {
    const auto& [id, src] = seed.detected[static_cast<std::size_t>(i)];
    if (!src.detection_time || !src.detection_type)
      throw std::invalid_argument("seed vertex without detection record");
    auto& x = labels[static_cast<std::size_t>(i)];
    x.gender = src.gender;
    x.orientation = src.orientation;
    x.state = SirState::Removed;
    x.detection_time = src.detection_time;
    x.detection_type = src.detection_type;
    x.infection_time = src.detection_time;  // true infection day is unobserved
    x.hidden_degree = sample_power_law(cdf, rng);
    to_index.emplace(id, i);
  }
  for (int i = k; i < m; ++i) {
    auto& x = labels[static_cast<std::size_t>(i)];
    if (rng.uniform() < female_frac) {
      x.gender = Gender::Female;
    } else {
      x.gender = Gender::Male;
      x.orientation =
          rng.uniform() < p_bisexual ? Orientation::Bisexual : Orientation::Hetero;
    }
    x.hidden_degree = sample_power_law(cdf, rng);
  }

  std::vector<int> idx(static_cast<std::size_t>(m - k));
  std::iota(idx.begin(), idx.end(), k);
  for (int t = 0; t < n_initial_infected; ++t) {
    const auto r = t + static_cast<int>(rng.index(static_cast<std::size_t>(m - k - t)));
    std::swap(idx[static_cast<std::size_t>(t)], idx[static_cast<std::size_t>(r)]);
    auto& x = labels[static_cast<std::size_t>(idx[static_cast<std::size_t>(t)])];
    x.state = SirState::Infective;
    x.infection_time = 0.0;
  }

  std::vector<std::tuple<int, int, double>> edges;
  edges.reserve(seed.edges.size());
  for (const auto& [a, b] : seed.edges) {
    const auto ia = to_index.find(a), ib = to_index.find(b);
    if (ia == to_index.end() || ib == to_index.end())
      throw std::invalid_argument("seed edge references unknown vertex");
    const double da = *labels[static_cast<std::size_t>(ia->second)].detection_time;
    const double db = *labels[static_cast<std::size_t>(ib->second)].detection_time;
    edges.emplace_back(ia->second, ib->second, std::min(da, db));
  }

  return EvolvingGraph(std::move(labels), edges);
}

Snapshot observable_network(const EvolvingGraph& g, int day) {
  Snapshot s;
  s.day = day;
  const double d = static_cast<double>(day);
  std::vector<char> in(static_cast<std::size_t>(g.size()), 0);
  for (int i = 0; i < g.size(); ++i) {
    const auto& x = g.label(i);
    if (x.detection_time && *x.detection_time <= d) {
      in[static_cast<std::size_t>(i)] = 1;
      s.detected.emplace_back(i, x);
    }
  }
  for (const auto& [i, x] : s.detected) {
    for (const auto& [j, first_day] : g.contacts(i)) {
      if (i < j && in[static_cast<std::size_t>(j)]) s.edges.emplace_back(i, j);
    }
  }
  std::sort(s.edges.begin(), s.edges.end());
  return s;
}

GraphStats graph_stats(const Snapshot& s) {
  GraphStats st;
  st.n_detected = static_cast<int>(s.detected.size());
  for (const auto& [id, x] : s.detected) {
    if (x.detection_type == DetectionType::ContactTraced)
      ++st.n_traced;
    else
      ++st.n_random;
  }
  st.n_edges = static_cast<long>(s.edges.size());

  std::unordered_map<int, int> pos;
  pos.reserve(s.detected.size());
  for (int i = 0; i < st.n_detected; ++i) pos.emplace(s.detected[static_cast<std::size_t>(i)].first, i);

  std::vector<int> parent(static_cast<std::size_t>(st.n_detected));
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int v) {
    while (parent[static_cast<std::size_t>(v)] != v) {
      parent[static_cast<std::size_t>(v)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(v)])];
      v = parent[static_cast<std::size_t>(v)];
    }
    return v;
  };
  for (const auto& [a, b] : s.edges) {
    const int ra = find(pos.at(a)), rb = find(pos.at(b));
    if (ra != rb) parent[static_cast<std::size_t>(ra)] = rb;
  }
  std::unordered_map<int, int> comp_size;
  for (int v = 0; v < st.n_detected; ++v) ++comp_size[find(v)];
  st.n_components = static_cast<int>(comp_size.size());
  for (const auto& [root, n] : comp_size) st.largest_component = std::max(st.largest_component, n);
  return st;
}

}  // namespace epinet
