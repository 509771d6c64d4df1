#pragma once

#include <cstdint>
#include <optional>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <vector>

#include "epinet/rng.hpp"

namespace epinet {

enum class Gender { Male, Female };
enum class Orientation { Hetero, Bisexual };
enum class SirState { Susceptible, Infective, Removed };
enum class DetectionType { Random, ContactTraced };

struct VertexLabel {
  Gender gender = Gender::Male;
  Orientation orientation = Orientation::Hetero;
  SirState state = SirState::Susceptible;
  std::optional<double> detection_time;
  std::optional<DetectionType> detection_type;
  int hidden_degree = 1;
  std::optional<double> infection_time;
};

// Observable (detected) network at a given day: the induced subgraph on
// vertices detected by that day. Vertices keep their original ids.
struct Snapshot {
  int day = 0;
  std::vector<std::pair<int, VertexLabel>> detected;  // sorted by id
  std::vector<std::pair<int, int>> edges;             // i < j, both detected
};

using SnapshotSequence = std::vector<Snapshot>;

struct GraphStats {
  int n_detected = 0;
  int n_random = 0;
  int n_traced = 0;
  long n_edges = 0;
  int n_components = 0;
  int largest_component = 0;
};

// Marked evolving graph: fixed vertex set, growing undirected edge set with
// first-contact days, SIR partition mirrored in the labels, and per-vertex
// most recent partner. Vertices are indexed 0..M-1.
class EvolvingGraph {
 public:
  explicit EvolvingGraph(std::vector<VertexLabel> labels);
  EvolvingGraph(std::vector<VertexLabel> labels,
                const std::vector<std::tuple<int, int, double>>& edges);

  int size() const { return static_cast<int>(labels_.size()); }
  const VertexLabel& label(int i) const { return labels_[static_cast<std::size_t>(i)]; }
  int degree(int i) const { return static_cast<int>(adj_[static_cast<std::size_t>(i)].size()); }
  // neighbor id -> first contact day
  const std::unordered_map<int, double>& contacts(int i) const {
    return adj_[static_cast<std::size_t>(i)];
  }
  long edge_count() const { return edge_count_; }
  std::optional<int> last_partner(int i) const {
    int p = last_partner_[static_cast<std::size_t>(i)];
    return p < 0 ? std::nullopt : std::optional<int>(p);
  }

  const std::vector<int>& infectives() const { return infectives_; }
  int susceptible_count() const { return susceptible_count_; }
  int removed_count() const { return removed_count_; }

  // Static orientation classes; membership never changes.
  const std::vector<int>& females() const { return females_; }
  const std::vector<int>& hetero_males() const { return hetero_males_; }
  const std::vector<int>& bisexual_males() const { return bisexual_males_; }

  // Inserts the edge (or keeps the earliest first-contact day if it exists)
  // and records each endpoint as the other's most recent partner. Contacting
  // a removed vertex is a model violation.
  void add_contact_edge(int i, int j, double day);
  void infect(int i, double day);
  void remove(int i, double day, DetectionType type);

 private:
  void init_indexes();
  void check_vertex(int i) const;

  std::vector<VertexLabel> labels_;
  std::vector<std::unordered_map<int, double>> adj_;
  std::vector<int> last_partner_;  // -1 = none
  std::vector<int> infectives_;
  std::vector<int> infective_pos_;  // position in infectives_, -1 otherwise
  long edge_count_ = 0;
  int susceptible_count_ = 0;
  int removed_count_ = 0;
  std::vector<int> females_, hetero_males_, bisexual_males_;
};

// Fresh population: hidden degrees i.i.d. from a discrete power law
// P(d = k) proportional to k^(-exponent) truncated at max(1, M-1), genders
// Bernoulli(female_frac), bisexual males so the population bisexual fraction
// is bisexual_frac, n_initial_infected uniformly chosen infectives, no edges.
EvolvingGraph init_population(int m, double degree_exponent, double female_frac,
                              double bisexual_frac, int n_initial_infected, RngStream& rng);
EvolvingGraph init_population(int m, double degree_exponent, double female_frac,
                              double bisexual_frac, int n_initial_infected, std::uint64_t seed);

// Population seeded from an already-detected network (its vertices enter in
// state R with their recorded labels and edges); the remainder is sampled as
// in init_population and the initial infectives are drawn from it.
EvolvingGraph seed_population(int m, const Snapshot& seed, double degree_exponent,
                              double female_frac, double bisexual_frac,
                              int n_initial_infected, RngStream& rng);

Snapshot observable_network(const EvolvingGraph& g, int day);

GraphStats graph_stats(const Snapshot& s);

}  // namespace epinet
