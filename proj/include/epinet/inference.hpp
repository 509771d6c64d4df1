#pragma once

#include <optional>
#include <vector>

#include "epinet/abc.hpp"
#include "epinet/matching.hpp"
#include "epinet/population.hpp"
#include "epinet/simulator.hpp"

namespace epinet {

// Everything one particle simulation needs besides theta.
struct EpidemicAbcSetup {
  SimConfig sim;
  MatchParams match;
  std::optional<Snapshot> seed;  // detected network used to seed each run
};

// Simulates one epidemic under theta and returns the temporal matching
// objective against the observation; nullopt when the summary statistic is
// undefined (epidemic extinct before the first snapshot, an empty detected
// graph where the observation has one, or an unsimulatable theta).
SimulateFn make_epidemic_distance(const EpidemicAbcSetup& setup, SnapshotSequence observed);

AbcResult infer_epidemic(const PriorSpec& prior, const AbcConfig& cfg,
                         const EpidemicAbcSetup& setup, const SnapshotSequence& observed,
                         const RngStream& root);

// One fresh simulation per accepted particle; per-day mean and standard
// deviation of the infective and detection counts across particles.
struct CurveStats {
  std::vector<int> days;
  std::vector<double> mean_infective, sd_infective;
  std::vector<double> mean_detected, sd_detected;
  std::vector<double> mean_random, sd_random;
  std::vector<double> mean_traced, sd_traced;
};

CurveStats resimulate_curves(const std::vector<Particle>& pop, const EpidemicAbcSetup& setup,
                             const RngStream& root);

}  // namespace epinet
