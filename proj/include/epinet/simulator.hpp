#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "epinet/population.hpp"
#include "epinet/rng.hpp"

namespace epinet {

// Model parameters, in the fixed order [|I0|, alpha, gamma, beta, lambda, sigma].
struct Theta {
  int n_initial_infected = 100;
  double alpha = 0.9;   // probability of re-contacting the previous partner
  double gamma = 0.001; // per-day spontaneous detection rate
  double beta = 0.001;  // per-day detection rate per traced contact
  double lambda = 0.1;  // per-day contact rate per infective
  double sigma = 0.005; // per-contact infection probability

  static Theta from_vector(const std::vector<double>& v);
  std::vector<double> to_vector() const;
  void validate() const;
};

struct SimConfig {
  int m = 5000;
  double start_day = 0.0;
  double horizon = 1000.0;
  double tau = 0.5;     // hidden/observed degree trade-off in partner choice
  double eta1 = 720.0;  // contact-tracing window, upper bound (days)
  double eta2 = 180.0;  // contact-tracing window, lower bound (days)
  std::vector<int> snapshot_days;
  double degree_exponent = 2.0;
  double female_frac = 0.5;
  double bisexual_frac = 0.05;
  std::uint64_t seed = 0;

  void validate() const;
};

enum class EventKind { Contact, Infection, DetectionRandom, DetectionTraced, Null };

struct Event {
  double day = 0.0;
  EventKind kind = EventKind::Null;
  int i = -1;
  int j = -1;
};

struct CountsSample {
  double day = 0.0;
  int susceptible = 0;
  int infective = 0;
  int removed = 0;
  int detected_random = 0;
  int detected_traced = 0;
};

struct Trajectory {
  std::vector<Event> events;
  SnapshotSequence snapshots;
  std::vector<CountsSample> counts;  // step function, one sample per SIR change
  EvolvingGraph graph;               // final state
};

bool sexually_compatible(const VertexLabel& a, const VertexLabel& b);

// gamma + beta * #{neighbors detected within [day - eta1, day - eta2]}
// (closed interval); i must be infective.
double detection_rate(const EvolvingGraph& g, int i, double day, const Theta& theta,
                      const SimConfig& cfg);

// Previous partner with probability alpha when alive, otherwise preferential
// attachment over compatible non-removed candidates with weight
// (1-tau) d(v) + tau d_h(v); nullopt when no candidate exists.
std::optional<int> choose_partner(const EvolvingGraph& g, int i, double alpha, double tau,
                                  RngStream& rng);

bool infection_occurs(const VertexLabel& infective, const VertexLabel& susceptible, double sigma,
                      RngStream& rng);

// Upper bound on the total event rate, valid until the next accepted event:
// counts every detected neighbor regardless of the tracing window, so it
// dominates the exact rate at every future instant.
double rate_bound(const EvolvingGraph& g, const Theta& theta);

struct StepResult {
  double day = 0.0;
  std::vector<Event> events;  // empty = the time limit was reached, no event
};

// One thinning step: waiting time from the rate bound, exact rates at the
// candidate time, event selection (the shortfall is a Null event), state
// update. Never applies an event past `limit`.
StepResult step_until(EvolvingGraph& g, const Theta& theta, const SimConfig& cfg, double day,
                      double limit, RngStream& rng);
StepResult step(EvolvingGraph& g, const Theta& theta, const SimConfig& cfg, double day,
                RngStream& rng);

Trajectory run(const Theta& theta, const SimConfig& cfg, RngStream& rng,
               const EvolvingGraph* initial = nullptr);
Trajectory run(const Theta& theta, const SimConfig& cfg);

// Last counts sample at or before `day`.
const CountsSample& counts_at(const Trajectory& traj, double day);

}  // namespace epinet
