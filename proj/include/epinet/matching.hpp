#pragma once

#include <vector>

#include "epinet/matrix.hpp"
#include "epinet/population.hpp"

namespace epinet {

struct MatchParams {
  double nu = 0.2;       // label-vs-structure trade-off
  double xi = 0.0;       // adjacency pad value
  double omega = 0.5;    // temporal weighting
  double pad_cost = 1.0; // label-cost pad value (no penalty discrimination)
  int max_iter = 100;
  double tol = 1e-6;
};

struct MatchResult {
  std::vector<int> permutation;  // row of G -> row of G'
  double phi = 0.0;              // objective at the projected permutation
  double relaxed_phi = 0.0;      // relaxed objective at the final iterate
  int iterations = 1;
};

// Optional per-iteration record of the conditional-gradient solve.
struct SolveTrace {
  std::vector<double> objectives;      // relaxed objective, initial value first
  double max_marginal_error = 0.0;     // worst |row/col sum - 1| over iterates
};

// Covariate rows (gender, orientation, detection day, detection type) for the
// detected vertices, in snapshot order.
Matrix snapshot_labels(const Snapshot& s);

// n x n block of 0/1 adjacency in snapshot order, padded to `size` with xi.
Matrix snapshot_adjacency(const Snapshot& s, int size, double xi);

// Cost-of-fitness matrix: columns of the stacked label matrix normalised to
// unit norm, pairwise distances rescaled to [0,1] with 1 = best fit, padded
// square with pad_cost.
Matrix label_cost(const Matrix& x, const Matrix& xp, double pad_cost = 1.0);

// (1-nu) ||A - P A' P^T||_F^2 / (||A||_F^2 + ||A'||_F^2) - nu <C,P>_F / ||C||_F
// with zero denominators defining a zero term.
double qap_objective(const Matrix& a, const Matrix& ap, const Matrix& c, const Matrix& p,
                     double nu);
double qap_at_permutation(const Matrix& a, const Matrix& ap, const Matrix& c,
                          const std::vector<int>& perm, double nu);

// Nearest permutation in Frobenius distance: linear assignment maximising
// <p, S>. Projecting a permutation matrix returns that permutation.
std::vector<int> project_to_permutation(const Matrix& p);

// Conditional gradient on the relaxed objective, projection to the nearest
// permutation, then a steepest transposition descent on the projected
// permutation (the bare projection is arbitrary when the relaxed optimum sits
// on a face of isomorphisms, e.g. for regular graphs).
MatchResult solve_match(const Matrix& a, const Matrix& ap, const Matrix& c, double nu,
                        int max_iter, double tol, SolveTrace* trace = nullptr);
MatchResult solve_match(const Snapshot& g, const Snapshot& gp, double nu, double xi,
                        int max_iter = 100, double tol = 1e-6, SolveTrace* trace = nullptr);

// Exhaustive minimum of the objective over permutations; refuses size > 8.
MatchResult brute_force_match(const Matrix& a, const Matrix& ap, const Matrix& c, double nu);
MatchResult brute_force_match(const Snapshot& g, const Snapshot& gp, double nu, double xi);

// Exponentially weighted mean with weight omega*(1-omega)^(K-i) on index i.
double weighted_temporal_mean(const std::vector<double>& phis, double omega);

double temporal_objective(const SnapshotSequence& s, const SnapshotSequence& sp, double omega,
                          double nu, double xi, int max_iter = 100, double tol = 1e-6,
                          std::vector<double>* per_snapshot = nullptr);

}  // namespace epinet
