#include "epinet/abc.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace epinet {

namespace {

constexpr double kSqrt2 = 1.4142135623730951;

double norm_pdf(double x, double mean, double sd) {
  const double z = (x - mean) / sd;
  return std::exp(-0.5 * z * z) / (sd * 2.5066282746310002);
}

double norm_cdf(double x, double mean, double sd) {
  return 0.5 * std::erfc(-(x - mean) / (sd * kSqrt2));
}

double gamma_shape(double mean, double sd) { return (mean / sd) * (mean / sd); }
double gamma_scale(double mean, double sd) { return sd * sd / mean; }

bool is_integer(double x) { return std::abs(x - std::round(x)) < 1e-9; }

}  // namespace

void ParamPrior::validate() const {
  if (sd <= 0.0) throw std::invalid_argument("prior sd must be positive");
  if (kind == Kind::GammaMeanSd) {
    if (mean <= 0.0) throw std::invalid_argument("gamma prior mean must be positive");
    return;
  }
  if (!(lo < hi)) throw std::invalid_argument("truncation range must be nonempty");
}

double ParamPrior::sample(RngStream& rng) const {
  switch (kind) {
    case Kind::TruncatedNormal:
      for (int k = 0; k < 1000000; ++k) {
        const double x = rng.normal(mean, sd);
        if (x >= lo && x <= hi) return x;
      }
      throw std::runtime_error("empty truncation region");
    case Kind::TruncatedDiscreteNormal:
      for (int k = 0; k < 1000000; ++k) {
        const double x = std::round(rng.normal(mean, sd));
        if (x >= lo && x <= hi) return x;
      }
      throw std::runtime_error("empty truncation region");
    case Kind::GammaMeanSd:
      return rng.gamma(gamma_shape(mean, sd), gamma_scale(mean, sd));
  }
  throw std::logic_error("unknown prior kind");
}

double ParamPrior::density(double x) const {
  switch (kind) {
    case Kind::TruncatedNormal: {
      if (x < lo || x > hi) return 0.0;
      const double mass = norm_cdf(hi, mean, sd) - norm_cdf(lo, mean, sd);
      if (mass <= 0.0) throw std::runtime_error("empty truncation region");
      return norm_pdf(x, mean, sd) / mass;
    }
    case Kind::TruncatedDiscreteNormal: {
      if (!is_integer(x) || x < lo || x > hi) return 0.0;
      const double k = std::round(x);
      // rounded-normal pmf; the truncation mass telescopes
      const double mass = norm_cdf(hi + 0.5, mean, sd) - norm_cdf(lo - 0.5, mean, sd);
      if (mass <= 0.0) throw std::runtime_error("empty truncation region");
      return (norm_cdf(k + 0.5, mean, sd) - norm_cdf(k - 0.5, mean, sd)) / mass;
    }
    case Kind::GammaMeanSd: {
      if (x < 0.0) return 0.0;
      const double shape = gamma_shape(mean, sd), scale = gamma_scale(mean, sd);
      if (x == 0.0) return shape > 1.0 ? 0.0 : (shape == 1.0 ? 1.0 / scale : 0.0);
      const double logp = (shape - 1.0) * std::log(x) - x / scale - std::lgamma(shape) -
                          shape * std::log(scale);
      return std::exp(logp);
    }
  }
  throw std::logic_error("unknown prior kind");
}

ParamVec sample_prior(const PriorSpec& prior, RngStream& rng) {
  ParamVec v;
  v.reserve(prior.size());
  for (const auto& p : prior) v.push_back(p.sample(rng));
  return v;
}

double prior_density(const PriorSpec& prior, const ParamVec& theta) {
  if (prior.size() != theta.size()) throw std::invalid_argument("theta dimension mismatch");
  double d = 1.0;
  for (std::size_t c = 0; c < prior.size(); ++c) d *= prior[c].density(theta[c]);
  return d;
}

ParamVec PerturbationKernel::perturb(const ParamVec& theta, RngStream& rng) const {
  if (theta.size() != coords.size()) throw std::invalid_argument("theta dimension mismatch");
  ParamVec out = theta;
  for (std::size_t c = 0; c < coords.size(); ++c) {
    const double step = rng.normal(0.0, coords[c].sd);
    out[c] += coords[c].discrete ? std::round(step) : step;
  }
  return out;
}

double PerturbationKernel::density(const ParamVec& from, const ParamVec& to) const {
  if (from.size() != coords.size() || to.size() != coords.size())
    throw std::invalid_argument("theta dimension mismatch");
  double d = 1.0;
  for (std::size_t c = 0; c < coords.size(); ++c) {
    const double delta = to[c] - from[c];
    if (coords[c].discrete) {
      if (!is_integer(delta)) return 0.0;
      const double k = std::round(delta);
      d *= norm_cdf(k + 0.5, 0.0, coords[c].sd) - norm_cdf(k - 0.5, 0.0, coords[c].sd);
    } else {
      d *= norm_pdf(delta, 0.0, coords[c].sd);
    }
  }
  return d;
}

PerturbationKernel kernel_from_population(const std::vector<Particle>& pop,
                                          const PriorSpec& prior, double scale,
                                          double sd_floor) {
  if (pop.empty()) throw std::invalid_argument("empty population");
  const std::size_t dim = prior.size();
  PerturbationKernel kernel;
  kernel.coords.resize(dim);
  for (std::size_t c = 0; c < dim; ++c) {
    double mean = 0.0;
    for (const auto& p : pop) mean += p.theta[c];
    mean /= static_cast<double>(pop.size());
    double var = 0.0;
    for (const auto& p : pop) {
      const double d = p.theta[c] - mean;
      var += d * d;
    }
    var /= static_cast<double>(pop.size());
    kernel.coords[c].discrete = prior[c].kind == ParamPrior::Kind::TruncatedDiscreteNormal;
    kernel.coords[c].sd = std::max(scale * std::sqrt(var), sd_floor);
  }
  return kernel;
}

double compute_weight(const ParamVec& theta_new, const std::vector<Particle>& prev,
                      const PriorSpec& prior, const PerturbationKernel& kernel) {
  if (prev.empty()) return 1.0;
  double denom = 0.0;
  for (const auto& p : prev) denom += p.weight * kernel.density(p.theta, theta_new);
  if (!(denom > 0.0)) throw std::runtime_error("kernel support violation: zero weight denominator");
  return prior_density(prior, theta_new) / denom;
}

std::vector<ParamVec> resample(const std::vector<Particle>& pop, RngStream& rng) {
  if (pop.empty()) throw std::invalid_argument("empty population");
  std::vector<double> cum;
  cum.reserve(pop.size());
  double total = 0.0;
  for (const auto& p : pop) {
    if (p.weight < 0.0) throw std::invalid_argument("negative particle weight");
    total += p.weight;
    cum.push_back(total);
  }
  if (!(total > 0.0)) throw std::invalid_argument("all particle weights are zero");
  std::vector<ParamVec> out;
  out.reserve(pop.size());
  for (std::size_t k = 0; k < pop.size(); ++k) {
    const double u = rng.uniform() * total;
    const auto it = std::upper_bound(cum.begin(), cum.end(), u);
    const std::size_t idx = std::min(static_cast<std::size_t>(it - cum.begin()), pop.size() - 1);
    out.push_back(pop[idx].theta);
  }
  return out;
}

std::pair<ParamVec, ParamVec> posterior_summary(const std::vector<Particle>& pop) {
  if (pop.empty()) throw std::invalid_argument("empty population");
  const std::size_t dim = pop.front().theta.size();
  ParamVec mean(dim, 0.0), sd(dim, 0.0);
  double total = 0.0;
  for (const auto& p : pop) total += p.weight;
  if (!(total > 0.0)) throw std::invalid_argument("all particle weights are zero");
  for (const auto& p : pop)
    for (std::size_t c = 0; c < dim; ++c) mean[c] += p.weight * p.theta[c];
  for (std::size_t c = 0; c < dim; ++c) mean[c] /= total;
  for (const auto& p : pop)
    for (std::size_t c = 0; c < dim; ++c) {
      const double d = p.theta[c] - mean[c];
      sd[c] += p.weight * d * d;
    }
  for (std::size_t c = 0; c < dim; ++c) sd[c] = std::sqrt(sd[c] / total);
  return {mean, sd};
}

void AbcConfig::validate() const {
  if (n_particles < 1) throw std::invalid_argument("need at least one particle");
  if (!(epsilon_initial > stop_kappa && stop_kappa > 0.0))
    throw std::invalid_argument("need epsilon_initial > kappa > 0");
  if (max_sim_attempts < 1) throw std::invalid_argument("need at least one attempt");
  if (max_ancestor_retries < 1) throw std::invalid_argument("need at least one ancestor retry");
  if (max_iterations < 1) throw std::invalid_argument("need at least one iteration");
}

namespace {

struct SlotOutcome {
  ParamVec theta;
  double distance = 0.0;
  long attempts = 0;
  bool ok = false;
};

}  // namespace

AbcResult abc_smc(const PriorSpec& prior, const AbcConfig& cfg, const SimulateFn& simulate,
                  const RngStream& root) {
  cfg.validate();
  for (const auto& p : prior) p.validate();
  const int n = cfg.n_particles;

  AbcResult res;
  std::vector<Particle> pop;
  PerturbationKernel kernel;
  double eps = cfg.epsilon_initial;

  for (int t = 0; t < cfg.max_iterations; ++t) {
    std::vector<double> cum_weights;
    if (t > 0) {
      cum_weights.reserve(pop.size());
      double total = 0.0;
      for (const auto& p : pop) {
        total += p.weight;
        cum_weights.push_back(total);
      }
    }

    std::vector<SlotOutcome> slots(static_cast<std::size_t>(n));
    std::atomic<int> next_slot{0};
    std::exception_ptr worker_error;
    std::mutex error_mutex;

    auto work_slot = [&](int s) {
      SlotOutcome& slot = slots[static_cast<std::size_t>(s)];
      const RngStream slot_rng = root.derive(0xabc0, static_cast<std::uint64_t>(t),
                                             static_cast<std::uint64_t>(s));
      RngStream ancestor_rng = slot_rng.derive(0);
      const int retries = t == 0 ? 1 : cfg.max_ancestor_retries;
      const long budget = t == 0
                              ? static_cast<long>(cfg.max_sim_attempts) * cfg.max_ancestor_retries
                              : cfg.max_sim_attempts;
      for (int r = 0; r < retries && !slot.ok; ++r) {
        const ParamVec* ancestor = nullptr;
        if (t > 0) {
          const double u = ancestor_rng.uniform() * cum_weights.back();
          const auto it = std::upper_bound(cum_weights.begin(), cum_weights.end(), u);
          const std::size_t idx =
              std::min(static_cast<std::size_t>(it - cum_weights.begin()), pop.size() - 1);
          ancestor = &pop[idx].theta;
        }
        for (long a = 0; a < budget && !slot.ok; ++a) {
          RngStream attempt_rng =
              slot_rng.derive(1 + static_cast<std::uint64_t>(r) * static_cast<std::uint64_t>(budget) +
                              static_cast<std::uint64_t>(a));
          ParamVec theta;
          if (t == 0) {
            theta = sample_prior(prior, attempt_rng);
          } else {
            bool in_support = false;
            for (int k = 0; k < 1000; ++k) {
              theta = kernel.perturb(*ancestor, attempt_rng);
              if (prior_density(prior, theta) > 0.0) {
                in_support = true;
                break;
              }
            }
            if (!in_support) {
              ++slot.attempts;
              continue;
            }
          }
          ++slot.attempts;
          const auto d = simulate(theta, attempt_rng);
          if (d && *d < eps) {
            slot.theta = std::move(theta);
            slot.distance = *d;
            slot.ok = true;
          }
        }
      }
    };

    int n_threads = cfg.n_threads > 0 ? cfg.n_threads
                                      : static_cast<int>(std::thread::hardware_concurrency());
    n_threads = std::clamp(n_threads, 1, n);
    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(n_threads));
    for (int w = 0; w < n_threads; ++w) {
      threads.emplace_back([&] {
        try {
          for (int s; (s = next_slot.fetch_add(1)) < n;) work_slot(s);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!worker_error) worker_error = std::current_exception();
        }
      });
    }
    for (auto& th : threads) th.join();
    if (worker_error) std::rethrow_exception(worker_error);

    long attempts = 0;
    bool all_ok = true;
    for (const auto& s : slots) {
      attempts += s.attempts;
      all_ok = all_ok && s.ok;
    }
    if (!all_ok) {
      res.population = pop;
      res.converged = false;
      res.message = "iteration " + std::to_string(t) +
                    " exhausted its attempt budget before accepting every particle";
      return res;
    }

    std::vector<Particle> new_pop(static_cast<std::size_t>(n));
    double mean_dist = 0.0, max_dist = 0.0, total_weight = 0.0;
    for (int s = 0; s < n; ++s) {
      auto& p = new_pop[static_cast<std::size_t>(s)];
      p.theta = slots[static_cast<std::size_t>(s)].theta;
      p.distance = slots[static_cast<std::size_t>(s)].distance;
      p.weight = t == 0 ? 1.0 : compute_weight(p.theta, pop, prior, kernel);
      if (!(p.weight > 0.0) || !std::isfinite(p.weight))
        throw std::runtime_error("nonpositive or non-finite particle weight");
      total_weight += p.weight;
      mean_dist += p.distance;
      max_dist = std::max(max_dist, p.distance);
    }
    mean_dist /= n;
    for (auto& p : new_pop) p.weight /= total_weight;

    pop = std::move(new_pop);

    IterationDiag diag;
    diag.iteration = t;
    diag.epsilon = eps;
    diag.attempts = attempts;
    diag.acceptance_rate = static_cast<double>(n) / static_cast<double>(attempts);
    diag.mean_distance = mean_dist;
    diag.max_distance = max_dist;
    std::tie(diag.mean, diag.sd) = posterior_summary(pop);
    res.diagnostics.push_back(std::move(diag));

    if (max_dist < cfg.stop_kappa) {
      res.population = pop;
      res.converged = true;
      return res;
    }

    eps = mean_dist;
    kernel = kernel_from_population(pop, prior);
  }

  res.population = pop;
  res.converged = false;
  res.message = "iteration cap reached before every particle fell below kappa";
  return res;
}

}  // namespace epinet
