#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "epinet/assignment.hpp"
#include "epinet/matching.hpp"
#include "test_support.hpp"

using namespace epinet;

namespace {

Matrix random_matrix(int n, RngStream& rng, double lo = -5.0, double hi = 5.0) {
  Matrix m(n, n);
  for (double& v : m.a) v = rng.uniform(lo, hi);
  return m;
}

double assignment_cost(const Matrix& c, const std::vector<int>& perm) {
  double s = 0.0;
  for (int i = 0; i < c.rows; ++i) s += c(i, perm[static_cast<std::size_t>(i)]);
  return s;
}

double brute_force_assignment(const Matrix& c) {
  std::vector<int> perm(static_cast<std::size_t>(c.rows));
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    best = std::min(best, assignment_cost(c, perm));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

Matrix permutation_matrix(const std::vector<int>& perm) {
  const int n = static_cast<int>(perm.size());
  Matrix p(n, n);
  for (int i = 0; i < n; ++i) p(i, perm[static_cast<std::size_t>(i)]) = 1.0;
  return p;
}

}  // namespace

TEST_CASE("linear assignment matches exhaustive search") {
  RngStream rng(71);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + static_cast<int>(rng.index(7));
    const Matrix c = random_matrix(n, rng);
    const std::vector<int> sol = solve_assignment(c);
    // a valid permutation
    std::vector<char> used(static_cast<std::size_t>(n), 0);
    for (int v : sol) {
      REQUIRE(v >= 0);
      REQUIRE(v < n);
      used[static_cast<std::size_t>(v)] = 1;
    }
    CHECK(std::count(used.begin(), used.end(), 1) == n);
    CHECK(assignment_cost(c, sol) == doctest::Approx(brute_force_assignment(c)).epsilon(1e-9));
  }
  CHECK_THROWS_AS(solve_assignment(Matrix(2, 3)), std::invalid_argument);
}

TEST_CASE("project_to_permutation of a permutation matrix is the identity operation") {
  RngStream rng(72);
  std::vector<int> perm{3, 1, 4, 0, 2};
  const std::vector<int> back = project_to_permutation(permutation_matrix(perm));
  CHECK(back == perm);
}

TEST_CASE("label_cost") {
  SUBCASE("identical label sets give a unit diagonal") {
    Matrix x(2, 2);
    x(0, 0) = 1.0;
    x(0, 1) = 3.0;
    x(1, 0) = 2.0;
    x(1, 1) = 5.0;
    const Matrix c = label_cost(x, x);
    REQUIRE(c.rows == 2);
    CHECK(c(0, 0) == 1.0);
    CHECK(c(1, 1) == 1.0);
    CHECK(c(0, 1) < 1.0);
  }

  SUBCASE("scalar labels 0 and 1 against themselves") {
    Matrix x(2, 1);
    x(1, 0) = 1.0;
    const Matrix c = label_cost(x, x);
    CHECK(c(0, 0) == 1.0);
    CHECK(c(0, 1) == 0.0);
    CHECK(c(1, 0) == 0.0);
    CHECK(c(1, 1) == 1.0);
  }

  SUBCASE("size mismatch pads with the pad value") {
    Matrix x(3, 1), xp(2, 1);
    x(0, 0) = 0.0;
    x(1, 0) = 1.0;
    x(2, 0) = 2.0;
    xp(0, 0) = 0.0;
    xp(1, 0) = 1.0;
    const Matrix c = label_cost(x, xp);
    REQUIRE(c.rows == 3);
    REQUIRE(c.cols == 3);
    for (int i = 0; i < 3; ++i) CHECK(c(i, 2) == 1.0);  // padded column
    // entries lie in [0,1]
    for (double v : c.a) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }

  SUBCASE("degenerate rescale: all labels equal") {
    Matrix x(2, 1);
    x(0, 0) = 5.0;
    x(1, 0) = 5.0;
    const Matrix c = label_cost(x, x);
    for (double v : c.a) CHECK(v == 1.0);
  }

  SUBCASE("covariate dimension mismatch") {
    CHECK_THROWS_AS(label_cost(Matrix(2, 2), Matrix(2, 3)), std::invalid_argument);
  }
}

TEST_CASE("qap_objective") {
  RngStream rng(73);

  SUBCASE("identical graphs under the identity, nu = 0") {
    const Snapshot s = testing::random_snapshot(5, 0.5, rng);
    const Matrix a = snapshot_adjacency(s, 5, 0.0);
    std::vector<int> id(5);
    std::iota(id.begin(), id.end(), 0);
    const Matrix c(5, 5, 1.0);
    CHECK(qap_objective(a, a, c, permutation_matrix(id), 0.0) == 0.0);
  }

  SUBCASE("empty graphs have a zero structural term") {
    const Matrix a(3, 3), c(3, 3, 1.0);
    std::vector<int> id{0, 1, 2};
    CHECK(qap_objective(a, a, c, permutation_matrix(id), 0.0) == 0.0);
  }

  SUBCASE("matrix form agrees with the permutation form") {
    for (int trial = 0; trial < 20; ++trial) {
      const int n = 2 + static_cast<int>(rng.index(5));
      const Snapshot s1 = testing::random_snapshot(n, 0.5, rng);
      const Snapshot s2 = testing::random_snapshot(n, 0.5, rng);
      const Matrix a = snapshot_adjacency(s1, n, 0.0);
      const Matrix ap = snapshot_adjacency(s2, n, 0.0);
      const Matrix c = label_cost(snapshot_labels(s1), snapshot_labels(s2));
      std::vector<int> perm(static_cast<std::size_t>(n));
      std::iota(perm.begin(), perm.end(), 0);
      for (int i = n - 1; i > 0; --i)
        std::swap(perm[static_cast<std::size_t>(i)], perm[rng.index(static_cast<std::size_t>(i) + 1)]);
      const double nu = rng.uniform(0.0, 1.0);
      CHECK(qap_objective(a, ap, c, permutation_matrix(perm), nu) ==
            doctest::Approx(qap_at_permutation(a, ap, c, perm, nu)).epsilon(1e-12));
    }
  }

  SUBCASE("structural term in [0,1], label term in [-nu n max(C)/||C||, 0]") {
    for (int trial = 0; trial < 50; ++trial) {
      const int n = 2 + static_cast<int>(rng.index(6));
      const Snapshot s1 = testing::random_snapshot(n, 0.5, rng);
      const Snapshot s2 = testing::random_snapshot(n, 0.5, rng);
      const Matrix a = snapshot_adjacency(s1, n, 0.0);
      const Matrix ap = snapshot_adjacency(s2, n, 0.0);
      const Matrix c = label_cost(snapshot_labels(s1), snapshot_labels(s2));
      std::vector<int> perm(static_cast<std::size_t>(n));
      std::iota(perm.begin(), perm.end(), 0);
      const double nu = 0.3;
      const double structural = qap_at_permutation(a, ap, c, perm, 0.0);
      CHECK(structural >= 0.0);
      CHECK(structural <= 1.0);
      const double full = qap_at_permutation(a, ap, c, perm, nu);
      const double label_term = full - (1.0 - nu) * structural;
      CHECK(label_term <= 1e-12);
      double cnorm = 0.0, cmax = 0.0;
      for (double v : c.a) {
        cnorm += v * v;
        cmax = std::max(cmax, v);
      }
      cnorm = std::sqrt(cnorm);
      CHECK(label_term >= -nu * n * cmax / cnorm - 1e-12);
      CHECK(std::isfinite(full));
    }
  }
}

TEST_CASE("brute_force_match") {
  RngStream rng(74);

  SUBCASE("identical triangles, nu = 0") {
    Snapshot s = testing::random_snapshot(3, 0.0, rng);
    s.edges = {{0, 1}, {0, 2}, {1, 2}};
    const MatchResult r = brute_force_match(s, s, 0.0, 0.0);
    CHECK(r.phi == 0.0);
  }

  SUBCASE("one edge versus no edge on two vertices evaluates to 1") {
    Snapshot a = testing::random_snapshot(2, 0.0, rng);
    a.edges = {{0, 1}};
    Snapshot b = testing::random_snapshot(2, 0.0, rng);
    const MatchResult r = brute_force_match(a, b, 0.0, 0.0);
    // ||A - P A' P^T||^2 / (||A||^2 + ||A'||^2) = 2/2 for either permutation
    CHECK(r.phi == 1.0);
  }

  SUBCASE("size greater than 8 is refused") {
    const Snapshot big = testing::random_snapshot(9, 0.3, rng);
    CHECK_THROWS_AS(brute_force_match(big, big, 0.0, 0.0), std::invalid_argument);
  }

  SUBCASE("equals an exhaustive sweep through the matrix objective") {
    for (int trial = 0; trial < 10; ++trial) {
      const Snapshot s1 = testing::random_snapshot(5, 0.4, rng);
      const Snapshot s2 = testing::random_snapshot(5, 0.4, rng);
      const Matrix a = snapshot_adjacency(s1, 5, 0.0);
      const Matrix ap = snapshot_adjacency(s2, 5, 0.0);
      const Matrix c = label_cost(snapshot_labels(s1), snapshot_labels(s2));
      const double nu = 0.25;
      std::vector<int> perm{0, 1, 2, 3, 4};
      double best = std::numeric_limits<double>::infinity();
      do {
        best = std::min(best, qap_objective(a, ap, c, permutation_matrix(perm), nu));
      } while (std::next_permutation(perm.begin(), perm.end()));
      const MatchResult r = brute_force_match(s1, s2, nu, 0.0);
      CHECK(r.phi == doctest::Approx(best).epsilon(1e-9));
    }
  }
}

TEST_CASE("solve_match") {
  RngStream rng(75);

  SUBCASE("isomorphic six-vertex graphs, nu = 0, reach the brute-force optimum") {
    for (int trial = 0; trial < 20; ++trial) {
      const Snapshot a = testing::random_snapshot(6, 0.5, rng);
      const Snapshot b = testing::relabeled_snapshot(a, rng);
      const MatchResult bf = brute_force_match(a, b, 0.0, 0.0);
      CHECK(bf.phi == 0.0);
      const MatchResult fw = solve_match(a, b, 0.0, 0.0);
      CHECK(fw.phi <= 1e-6);
    }
  }

  SUBCASE("the relaxed objective never increases and iterates stay doubly stochastic") {
    for (int trial = 0; trial < 20; ++trial) {
      const int n = 3 + static_cast<int>(rng.index(5));
      const Snapshot s1 = testing::random_snapshot(n, 0.5, rng);
      const Snapshot s2 = testing::random_snapshot(n, 0.5, rng);
      SolveTrace trace;
      const MatchResult r = solve_match(s1, s2, 0.3, 0.0, 100, 1e-6, &trace);
      CHECK(r.iterations >= 1);
      for (std::size_t k = 1; k < trace.objectives.size(); ++k)
        CHECK(trace.objectives[k] <= trace.objectives[k - 1] + 1e-12);
      CHECK(trace.max_marginal_error <= 1e-9);
    }
  }

  SUBCASE("size mismatch pads to the larger graph") {
    const Snapshot small = testing::random_snapshot(4, 0.5, rng);
    const Snapshot large = testing::random_snapshot(6, 0.5, rng);
    const MatchResult r = solve_match(small, large, 0.2, 0.0);
    CHECK(r.permutation.size() == 6);
  }

  SUBCASE("projected value stays above the brute-force optimum") {
    for (int trial = 0; trial < 30; ++trial) {
      const int n = 2 + static_cast<int>(rng.index(5));
      const int m = 2 + static_cast<int>(rng.index(5));
      const double nu = (trial % 3) * 0.25;
      const Snapshot s1 = testing::random_snapshot(n, 0.4, rng);
      const Snapshot s2 = testing::random_snapshot(m, 0.4, rng);
      const MatchResult fw = solve_match(s1, s2, nu, 0.0);
      const MatchResult bf = brute_force_match(s1, s2, nu, 0.0);
      CHECK(fw.phi >= bf.phi - 1e-9);
    }
  }

  SUBCASE("argument validation") {
    const Snapshot s = testing::random_snapshot(3, 0.5, rng);
    CHECK_THROWS_AS(solve_match(s, s, 0.2, 0.0, 0, 1e-6), std::invalid_argument);
    Matrix bad(2, 2);
    bad(0, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(solve_match(bad, Matrix(2, 2), Matrix(2, 2, 1.0), 0.2, 10, 1e-6),
                    std::invalid_argument);
  }

  SUBCASE("empty snapshots match trivially") {
    const Snapshot empty1{.day = 0, .detected = {}, .edges = {}};
    const Snapshot empty2{.day = 0, .detected = {}, .edges = {}};
    const MatchResult r = solve_match(empty1, empty2, 0.2, 0.0);
    CHECK(r.phi == 0.0);
    CHECK(r.iterations == 1);
    CHECK(r.permutation.empty());
  }
}

TEST_CASE("weighted_temporal_mean") {
  SUBCASE("single snapshot reduces to its objective") {
    CHECK(weighted_temporal_mean({0.37}, 0.5) == 0.37);
  }

  SUBCASE("omega = 0.5, K = 1: weights (1/3, 2/3)") {
    const double a = 0.2, b = 0.8;
    CHECK(std::abs(weighted_temporal_mean({a, b}, 0.5) - (a / 3 + 2 * b / 3)) < 1e-12);
  }

  SUBCASE("constant objectives are reproduced exactly") {
    const std::vector<double> phis(7, 0.41);
    CHECK(std::abs(weighted_temporal_mean(phis, 0.3) - 0.41) < 1e-12);
  }

  SUBCASE("weights are normalized for any omega and K") {
    RngStream rng(76);
    for (int trial = 0; trial < 20; ++trial) {
      const int k = 1 + static_cast<int>(rng.index(9));
      const double omega = rng.uniform(0.01, 0.99);
      const std::vector<double> ones(static_cast<std::size_t>(k), 1.0);
      CHECK(std::abs(weighted_temporal_mean(ones, omega) - 1.0) < 1e-12);
    }
  }

  SUBCASE("argument validation") {
    CHECK_THROWS_AS(weighted_temporal_mean({}, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(weighted_temporal_mean({0.1}, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(weighted_temporal_mean({0.1}, 1.0), std::invalid_argument);
  }
}

TEST_CASE("temporal_objective") {
  RngStream rng(77);

  SUBCASE("a sequence against itself with nu = 0 is zero") {
    SnapshotSequence s;
    for (int day : {0, 100, 200}) s.push_back(testing::random_snapshot(5, 0.4, rng, day));
    CHECK(temporal_objective(s, s, 0.5, 0.0, 0.0) == 0.0);
  }

  SUBCASE("single snapshot reduces to the per-snapshot objective") {
    const SnapshotSequence a{testing::random_snapshot(5, 0.4, rng, 100)};
    const SnapshotSequence b{testing::random_snapshot(6, 0.4, rng, 100)};
    const double phi = solve_match(a[0], b[0], 0.2, 0.0).phi;
    CHECK(temporal_objective(a, b, 0.5, 0.2, 0.0) == phi);
  }

  SUBCASE("repeating one pair yields that pair's objective") {
    const Snapshot x = testing::random_snapshot(5, 0.4, rng, 100);
    const Snapshot y = testing::random_snapshot(5, 0.4, rng, 100);
    const double phi = solve_match(x, y, 0.2, 0.0).phi;
    SnapshotSequence a(4, x), b(4, y);
    CHECK(std::abs(temporal_objective(a, b, 0.5, 0.2, 0.0) - phi) < 1e-12);
  }

  SUBCASE("argument validation") {
    const SnapshotSequence a{testing::random_snapshot(3, 0.4, rng, 100)};
    SnapshotSequence b{testing::random_snapshot(3, 0.4, rng, 100),
                       testing::random_snapshot(3, 0.4, rng, 200)};
    CHECK_THROWS_AS(temporal_objective(a, b, 0.5, 0.2, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(temporal_objective({}, {}, 0.5, 0.2, 0.0), std::invalid_argument);
    SnapshotSequence c{testing::random_snapshot(3, 0.4, rng, 150)};
    CHECK_THROWS_AS(temporal_objective(a, c, 0.5, 0.2, 0.0), std::invalid_argument);
  }
}
