#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "epinet/rng.hpp"

namespace epinet {

using ParamVec = std::vector<double>;

struct ParamPrior {
  enum class Kind { TruncatedNormal, TruncatedDiscreteNormal, GammaMeanSd };
  Kind kind = Kind::TruncatedNormal;
  double mean = 0.0;
  double sd = 1.0;
  double lo = 0.0;  // truncation range, unused by the gamma kind
  double hi = 1.0;

  double sample(RngStream& rng) const;
  double density(double x) const;  // pdf, or pmf for the discrete kind
  void validate() const;
};

using PriorSpec = std::vector<ParamPrior>;

ParamVec sample_prior(const PriorSpec& prior, RngStream& rng);
double prior_density(const PriorSpec& prior, const ParamVec& theta);

// Per-coordinate independent perturbation: Normal(0, sd), or a rounded
// normal for discrete coordinates (pmf = Phi(d+1/2) - Phi(d-1/2)).
struct PerturbationKernel {
  struct Coord {
    bool discrete = false;
    double sd = 1.0;
  };
  std::vector<Coord> coords;

  ParamVec perturb(const ParamVec& theta, RngStream& rng) const;
  double density(const ParamVec& from, const ParamVec& to) const;
};

struct Particle {
  ParamVec theta;
  double weight = 1.0;
  double distance = 0.0;
};

// Kernel sd = scale * per-coordinate sd of the population, floored.
PerturbationKernel kernel_from_population(const std::vector<Particle>& pop,
                                          const PriorSpec& prior, double scale = 0.2,
                                          double sd_floor = 1e-8);

// w = pi(theta) / sum_j w_j K(theta_j -> theta); 1 when prev is empty
// (iteration 0). A vanishing denominator signals a kernel-support violation.
double compute_weight(const ParamVec& theta_new, const std::vector<Particle>& prev,
                      const PriorSpec& prior, const PerturbationKernel& kernel);

// N draws with replacement proportional to the weights.
std::vector<ParamVec> resample(const std::vector<Particle>& pop, RngStream& rng);

// Weighted per-coordinate mean and standard deviation.
std::pair<ParamVec, ParamVec> posterior_summary(const std::vector<Particle>& pop);

struct AbcConfig {
  int n_particles = 50;
  double epsilon_initial = 0.8;
  double stop_kappa = 0.3;
  int max_sim_attempts = 100;    // per ancestor
  int max_ancestor_retries = 50; // per particle slot and iteration
  int max_iterations = 30;
  int n_threads = 0;  // 0 = hardware concurrency

  void validate() const;
};

struct IterationDiag {
  int iteration = 0;
  double epsilon = 0.0;
  long attempts = 0;
  double acceptance_rate = 0.0;
  double mean_distance = 0.0;
  double max_distance = 0.0;
  ParamVec mean;
  ParamVec sd;
};

struct AbcResult {
  std::vector<Particle> population;
  std::vector<IterationDiag> diagnostics;
  bool converged = false;
  std::string message;
};

// Distance of one simulation from the observation, or nullopt when the
// summary statistic is undefined for the attempt.
using SimulateFn = std::function<std::optional<double>(const ParamVec&, RngStream&)>;

// Sequential Monte Carlo ABC: prior population filtered at epsilon_initial,
// then resample/perturb/accept iterations with epsilon set to the mean
// accepted distance of the previous iteration, stopping once every accepted
// particle is below stop_kappa. Particle slots own derived rng streams, so
// the result is a deterministic function of the root stream regardless of
// thread scheduling.
AbcResult abc_smc(const PriorSpec& prior, const AbcConfig& cfg, const SimulateFn& simulate,
                  const RngStream& root);

}  // namespace epinet
