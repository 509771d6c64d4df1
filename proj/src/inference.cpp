#include "epinet/inference.hpp"

#include <cmath>
#include <stdexcept>

namespace epinet {

namespace {

Trajectory simulate_particle(const Theta& theta, const EpidemicAbcSetup& setup, RngStream& rng) {
  if (setup.seed) {
    RngStream seed_rng = rng.derive(0x5eed);
    const EvolvingGraph g0 =
        seed_population(setup.sim.m, *setup.seed, setup.sim.degree_exponent,
                        setup.sim.female_frac, setup.sim.bisexual_frac,
                        theta.n_initial_infected, seed_rng);
    return run(theta, setup.sim, rng, &g0);
  }
  return run(theta, setup.sim, rng, nullptr);
}

}  // namespace

SimulateFn make_epidemic_distance(const EpidemicAbcSetup& setup, SnapshotSequence observed) {
  if (observed.empty()) throw std::invalid_argument("empty observed snapshot sequence");
  if (setup.sim.snapshot_days.size() != observed.size())
    throw std::invalid_argument("observed days disagree with the simulation subdivision");
  for (std::size_t k = 0; k < observed.size(); ++k)
    if (setup.sim.snapshot_days[k] != observed[k].day)
      throw std::invalid_argument("observed days disagree with the simulation subdivision");

  return [setup, observed = std::move(observed)](const ParamVec& theta_vec,
                                                 RngStream& rng) -> std::optional<double> {
    std::optional<Trajectory> traj;
    try {
      Theta theta = Theta::from_vector(theta_vec);
      theta.validate();
      traj.emplace(simulate_particle(theta, setup, rng));
    } catch (const std::exception&) {
      return std::nullopt;  // unsimulatable draw counts as a failed attempt
    }

    const auto& last = traj->counts.back();
    if (last.infective == 0 && last.day < static_cast<double>(setup.sim.snapshot_days.front()))
      return std::nullopt;  // extinct before the first snapshot
    for (std::size_t k = 0; k < observed.size(); ++k) {
      if (!observed[k].detected.empty() && traj->snapshots[k].detected.empty())
        return std::nullopt;  // degenerate match
    }
    return temporal_objective(traj->snapshots, observed, setup.match.omega, setup.match.nu,
                              setup.match.xi, setup.match.max_iter, setup.match.tol);
  };
}

AbcResult infer_epidemic(const PriorSpec& prior, const AbcConfig& cfg,
                         const EpidemicAbcSetup& setup, const SnapshotSequence& observed,
                         const RngStream& root) {
  setup.sim.validate();
  return abc_smc(prior, cfg, make_epidemic_distance(setup, observed), root);
}

CurveStats resimulate_curves(const std::vector<Particle>& pop, const EpidemicAbcSetup& setup,
                             const RngStream& root) {
  if (pop.empty()) throw std::invalid_argument("empty population");
  CurveStats out;
  out.days = setup.sim.snapshot_days;
  const std::size_t nd = out.days.size();
  std::vector<std::vector<double>> inf(nd), det(nd), rnd(nd), ct(nd);

  for (std::size_t p = 0; p < pop.size(); ++p) {
    RngStream rng = root.derive(0xc08e, p);
    const Theta theta = Theta::from_vector(pop[p].theta);
    Trajectory traj = simulate_particle(theta, setup, rng);
    for (std::size_t k = 0; k < nd; ++k) {
      const auto& c = counts_at(traj, static_cast<double>(out.days[k]));
      inf[k].push_back(c.infective);
      det[k].push_back(c.removed);
      rnd[k].push_back(c.detected_random);
      ct[k].push_back(c.detected_traced);
    }
  }

  auto summarise = [](const std::vector<double>& xs, double& mean, double& sd) {
    mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    sd = std::sqrt(var / static_cast<double>(xs.size()));
  };

  out.mean_infective.resize(nd);
  out.sd_infective.resize(nd);
  out.mean_detected.resize(nd);
  out.sd_detected.resize(nd);
  out.mean_random.resize(nd);
  out.sd_random.resize(nd);
  out.mean_traced.resize(nd);
  out.sd_traced.resize(nd);
  for (std::size_t k = 0; k < nd; ++k) {
    summarise(inf[k], out.mean_infective[k], out.sd_infective[k]);
    summarise(det[k], out.mean_detected[k], out.sd_detected[k]);
    summarise(rnd[k], out.mean_random[k], out.sd_random[k]);
    summarise(ct[k], out.mean_traced[k], out.sd_traced[k]);
  }
  return out;
}

}  // namespace epinet
