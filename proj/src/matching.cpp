#include "epinet/matching.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>
#include <stdexcept>

#include "epinet/assignment.hpp"

namespace epinet {

namespace {

void mul(const Matrix& a, const Matrix& b, Matrix& out) {
  out = Matrix(a.rows, b.cols);
  for (int i = 0; i < a.rows; ++i) {
    for (int k = 0; k < a.cols; ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (int j = 0; j < b.cols; ++j) out(i, j) += aik * b(k, j);
    }
  }
}

// out = a * b^T
void mul_abt(const Matrix& a, const Matrix& b, Matrix& out) {
  out = Matrix(a.rows, b.rows);
  for (int i = 0; i < a.rows; ++i) {
    for (int j = 0; j < b.rows; ++j) {
      double s = 0.0;
      for (int k = 0; k < a.cols; ++k) s += a(i, k) * b(j, k);
      out(i, j) = s;
    }
  }
}

double frob_inner(const Matrix& a, const Matrix& b) {
  double s = 0.0;
  for (std::size_t t = 0; t < a.a.size(); ++t) s += a.a[t] * b.a[t];
  return s;
}

double frob_norm2(const Matrix& a) { return frob_inner(a, a); }

// residual A P - P A'
void residual(const Matrix& a, const Matrix& ap, const Matrix& p, Matrix& out) {
  Matrix t1, t2;
  mul(a, p, t1);
  mul(p, ap, t2);
  out = t1;
  for (std::size_t t = 0; t < out.a.size(); ++t) out.a[t] -= t2.a[t];
}

void check_square_same(const Matrix& a, const Matrix& ap, const Matrix& c) {
  if (a.rows != a.cols || ap.rows != ap.cols || c.rows != c.cols)
    throw std::invalid_argument("matching expects square matrices");
  if (a.rows != ap.rows || a.rows != c.rows)
    throw std::invalid_argument("matching expects equal dimensions after padding");
}

double max_marginal_error(const Matrix& p) {
  double err = 0.0;
  for (int i = 0; i < p.rows; ++i) {
    double rs = 0.0;
    for (int j = 0; j < p.cols; ++j) rs += p(i, j);
    err = std::max(err, std::abs(rs - 1.0));
  }
  for (int j = 0; j < p.cols; ++j) {
    double cs = 0.0;
    for (int i = 0; i < p.rows; ++i) cs += p(i, j);
    err = std::max(err, std::abs(cs - 1.0));
  }
  return err;
}

// structural contribution of the ordered pairs (p,q) with p or q in {i,j};
// swapping the images of i and j changes exactly these terms
double swap_local_sum(const Matrix& a, const Matrix& b, const std::vector<int>& perm, int i,
                      int j) {
  const int n = a.rows;
  double s = 0.0;
  const int pi = perm[static_cast<std::size_t>(i)], pj = perm[static_cast<std::size_t>(j)];
  for (int q = 0; q < n; ++q) {
    const int pq = perm[static_cast<std::size_t>(q)];
    const double d1 = a(i, q) - b(pi, pq);
    const double d2 = a(j, q) - b(pj, pq);
    s += d1 * d1 + d2 * d2;
  }
  for (int p = 0; p < n; ++p) {
    if (p == i || p == j) continue;
    const int pp = perm[static_cast<std::size_t>(p)];
    const double d1 = a(p, i) - b(pp, pi);
    const double d2 = a(p, j) - b(pp, pj);
    s += d1 * d1 + d2 * d2;
  }
  return s;
}

void polish_permutation(const Matrix& a, const Matrix& b, const Matrix& c, double nu,
                        std::vector<int>& perm) {
  const int n = a.rows;
  if (n < 2) return;
  const double z = frob_norm2(a) + frob_norm2(b);
  const double cnorm = std::sqrt(frob_norm2(c));
  const double k1 = z > 0.0 ? (1.0 - nu) / z : 0.0;
  const double k2 = cnorm > 0.0 ? nu / cnorm : 0.0;

  auto local_value = [&](int i, int j) {
    return k1 * swap_local_sum(a, b, perm, i, j) -
           k2 * (c(i, perm[static_cast<std::size_t>(i)]) + c(j, perm[static_cast<std::size_t>(j)]));
  };

  for (int pass = 0; pass < 100; ++pass) {
    double best_delta = -1e-12;
    int bi = -1, bj = -1;
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        const double before = local_value(i, j);
        std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
        const double after = local_value(i, j);
        std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
        const double delta = after - before;
        if (delta < best_delta) {
          best_delta = delta;
          bi = i;
          bj = j;
        }
      }
    }
    if (bi < 0) break;
    std::swap(perm[static_cast<std::size_t>(bi)], perm[static_cast<std::size_t>(bj)]);
  }
}

}  // namespace

Matrix snapshot_labels(const Snapshot& s) {
  Matrix x(static_cast<int>(s.detected.size()), 4);
  for (int i = 0; i < x.rows; ++i) {
    const auto& lab = s.detected[static_cast<std::size_t>(i)].second;
    if (!lab.detection_time || !lab.detection_type)
      throw std::invalid_argument("snapshot vertex without detection record");
    x(i, 0) = lab.gender == Gender::Female ? 1.0 : 0.0;
    x(i, 1) = lab.orientation == Orientation::Bisexual ? 1.0 : 0.0;
    x(i, 2) = *lab.detection_time;
    x(i, 3) = *lab.detection_type == DetectionType::ContactTraced ? 1.0 : 0.0;
  }
  return x;
}

Matrix snapshot_adjacency(const Snapshot& s, int size, double xi) {
  const int n = static_cast<int>(s.detected.size());
  if (size < n) throw std::invalid_argument("padded size smaller than snapshot");
  Matrix a(size, size);
  // dummy rows/columns carry the pad value, including the dummy diagonal
  for (int i = 0; i < size; ++i)
    for (int j = 0; j < size; ++j)
      if (i >= n || j >= n) a(i, j) = xi;
  std::unordered_map<int, int> pos;
  pos.reserve(s.detected.size());
  for (int i = 0; i < n; ++i) pos.emplace(s.detected[static_cast<std::size_t>(i)].first, i);
  for (const auto& [u, v] : s.edges) {
    const int i = pos.at(u), j = pos.at(v);
    a(i, j) = 1.0;
    a(j, i) = 1.0;
  }
  return a;
}

Matrix label_cost(const Matrix& x, const Matrix& xp, double pad_cost) {
  if (x.rows > 0 && xp.rows > 0 && x.cols != xp.cols)
    throw std::invalid_argument("label matrices disagree on covariate dimension");
  const int n = x.rows, m = xp.rows, p = std::max(n, m);
  Matrix c(p, p, pad_cost);
  if (n == 0 || m == 0) return c;

  // joint column normalisation over the stacked rows
  const int d = x.cols;
  Matrix xs = x, xps = xp;
  for (int col = 0; col < d; ++col) {
    double norm2 = 0.0;
    for (int i = 0; i < n; ++i) norm2 += x(i, col) * x(i, col);
    for (int i = 0; i < m; ++i) norm2 += xp(i, col) * xp(i, col);
    const double norm = std::sqrt(norm2);
    if (norm == 0.0) continue;  // constant-zero column carries no information
    for (int i = 0; i < n; ++i) xs(i, col) /= norm;
    for (int i = 0; i < m; ++i) xps(i, col) /= norm;
  }

  Matrix chat(n, m);
  double cmin = std::numeric_limits<double>::infinity();
  double cmax = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      double s = 0.0;
      for (int col = 0; col < d; ++col) {
        const double diff = xs(i, col) - xps(j, col);
        s += diff * diff;
      }
      const double dist = std::sqrt(s);
      chat(i, j) = dist;
      cmin = std::min(cmin, dist);
      cmax = std::max(cmax, dist);
    }
  }
  if (cmax > cmin) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < m; ++j) c(i, j) = (cmax - chat(i, j)) / (cmax - cmin);
  } else {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < m; ++j) c(i, j) = 1.0;  // all pairs equally fit
  }
  return c;
}

double qap_objective(const Matrix& a, const Matrix& ap, const Matrix& c, const Matrix& p,
                     double nu) {
  check_square_same(a, ap, c);
  if (p.rows != a.rows || p.cols != a.rows)
    throw std::invalid_argument("assignment matrix dimension mismatch");
  const double z = frob_norm2(a) + frob_norm2(ap);
  double structural = 0.0;
  if (z > 0.0) {
    Matrix pap, papt;
    mul(p, ap, pap);
    mul_abt(pap, p, papt);
    double s = 0.0;
    for (std::size_t t = 0; t < papt.a.size(); ++t) {
      const double diff = a.a[t] - papt.a[t];
      s += diff * diff;
    }
    structural = s / z;
  }
  const double cnorm = std::sqrt(frob_norm2(c));
  const double label = cnorm > 0.0 ? frob_inner(c, p) / cnorm : 0.0;
  return (1.0 - nu) * structural - nu * label;
}

double qap_at_permutation(const Matrix& a, const Matrix& ap, const Matrix& c,
                          const std::vector<int>& perm, double nu) {
  check_square_same(a, ap, c);
  const int n = a.rows;
  if (static_cast<int>(perm.size()) != n) throw std::invalid_argument("permutation size mismatch");
  const double z = frob_norm2(a) + frob_norm2(ap);
  double structural = 0.0;
  if (z > 0.0) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const double diff =
            a(i, j) - ap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
        s += diff * diff;
      }
    }
    structural = s / z;
  }
  const double cnorm = std::sqrt(frob_norm2(c));
  double label = 0.0;
  if (cnorm > 0.0) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += c(i, perm[static_cast<std::size_t>(i)]);
    label = s / cnorm;
  }
  return (1.0 - nu) * structural - nu * label;
}

std::vector<int> project_to_permutation(const Matrix& p) {
  if (p.rows != p.cols) throw std::invalid_argument("projection expects a square matrix");
  Matrix neg(p.rows, p.cols);
  for (std::size_t t = 0; t < neg.a.size(); ++t) neg.a[t] = -p.a[t];
  return solve_assignment(neg);
}

MatchResult solve_match(const Matrix& a, const Matrix& ap, const Matrix& c, double nu,
                        int max_iter, double tol, SolveTrace* trace) {
  check_square_same(a, ap, c);
  if (max_iter <= 0) throw std::invalid_argument("max_iter must be positive");
  for (const Matrix* m : {&a, &ap, &c})
    for (double v : m->a)
      if (!std::isfinite(v)) throw std::invalid_argument("non-finite matrix entry");

  const int n = a.rows;
  MatchResult res;
  if (n == 0) return res;

  const double z = frob_norm2(a) + frob_norm2(ap);
  const double cnorm = std::sqrt(frob_norm2(c));
  const double k1 = z > 0.0 ? (1.0 - nu) / z : 0.0;
  const double k2 = cnorm > 0.0 ? nu / cnorm : 0.0;

  // barycenter start; the relaxed objective k1*||AP - PA'||^2 - k2*<C,P> is
  // convex and agrees with the padded objective on permutations
  Matrix p(n, n, 1.0 / n);
  Matrix r;
  residual(a, ap, p, r);
  double f = k1 * frob_norm2(r) - k2 * frob_inner(c, p);
  if (trace) {
    trace->objectives.push_back(f);
    trace->max_marginal_error = max_marginal_error(p);
  }

  Matrix grad(n, n), d(n, n), rd, t1, t2;
  int iterations = 0;
  for (int iter = 1; iter <= max_iter; ++iter) {
    iterations = iter;
    // grad = 2 k1 (A R - R A') - k2 C, using the symmetry of A and A'
    mul(a, r, t1);
    mul(r, ap, t2);
    for (std::size_t t = 0; t < grad.a.size(); ++t)
      grad.a[t] = 2.0 * k1 * (t1.a[t] - t2.a[t]) - k2 * c.a[t];

    const std::vector<int> vertex = solve_assignment(grad);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        d(i, j) = (vertex[static_cast<std::size_t>(i)] == j ? 1.0 : 0.0) - p(i, j);

    residual(a, ap, d, rd);
    const double qa = k1 * frob_norm2(rd);
    const double qb = 2.0 * k1 * frob_inner(r, rd) - k2 * frob_inner(c, d);
    if (qb >= 0.0) break;  // no descent along the polytope

    const double s = qa > 0.0 ? std::min(1.0, -qb / (2.0 * qa)) : 1.0;
    for (std::size_t t = 0; t < p.a.size(); ++t) p.a[t] += s * d.a[t];
    for (std::size_t t = 0; t < r.a.size(); ++t) r.a[t] += s * rd.a[t];
    const double f_new = f + qb * s + qa * s * s;
    if (trace) {
      trace->objectives.push_back(f_new);
      trace->max_marginal_error = std::max(trace->max_marginal_error, max_marginal_error(p));
    }
    const double decrease = f - f_new;
    f = f_new;
    if (decrease < tol * std::max(std::abs(f), 1e-12)) break;
  }

  res.permutation = project_to_permutation(p);
  polish_permutation(a, ap, c, nu, res.permutation);
  res.phi = qap_at_permutation(a, ap, c, res.permutation, nu);
  residual(a, ap, p, r);
  res.relaxed_phi = k1 * frob_norm2(r) - k2 * frob_inner(c, p);
  res.iterations = std::max(iterations, 1);
  return res;
}

namespace {

std::pair<Matrix, Matrix> padded_adjacency(const Snapshot& g, const Snapshot& gp, double xi) {
  const int p = std::max(static_cast<int>(g.detected.size()), static_cast<int>(gp.detected.size()));
  return {snapshot_adjacency(g, p, xi), snapshot_adjacency(gp, p, xi)};
}

}  // namespace

MatchResult solve_match(const Snapshot& g, const Snapshot& gp, double nu, double xi,
                        int max_iter, double tol, SolveTrace* trace) {
  auto [a, ap] = padded_adjacency(g, gp, xi);
  const Matrix c = label_cost(snapshot_labels(g), snapshot_labels(gp));
  return solve_match(a, ap, c, nu, max_iter, tol, trace);
}

MatchResult brute_force_match(const Matrix& a, const Matrix& ap, const Matrix& c, double nu) {
  check_square_same(a, ap, c);
  const int n = a.rows;
  if (n > 8) throw std::invalid_argument("brute force refuses padded size > 8");
  MatchResult res;
  if (n == 0) return res;
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> best_perm = perm;
  long count = 0;
  do {
    const double v = qap_at_permutation(a, ap, c, perm, nu);
    ++count;
    if (v < best) {
      best = v;
      best_perm = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  res.permutation = best_perm;
  res.phi = best;
  res.relaxed_phi = best;
  res.iterations = static_cast<int>(std::min<long>(count, 1000000));
  return res;
}

MatchResult brute_force_match(const Snapshot& g, const Snapshot& gp, double nu, double xi) {
  auto [a, ap] = padded_adjacency(g, gp, xi);
  const Matrix c = label_cost(snapshot_labels(g), snapshot_labels(gp));
  return brute_force_match(a, ap, c, nu);
}

double weighted_temporal_mean(const std::vector<double>& phis, double omega) {
  if (phis.empty()) throw std::invalid_argument("empty objective sequence");
  if (!(omega > 0.0 && omega < 1.0)) throw std::invalid_argument("omega must lie in (0,1)");
  const int k = static_cast<int>(phis.size()) - 1;
  double num = 0.0, den = 0.0;
  for (int i = 0; i <= k; ++i) {
    const double w = omega * std::pow(1.0 - omega, k - i);
    num += w * phis[static_cast<std::size_t>(i)];
    den += w;
  }
  return num / den;
}

double temporal_objective(const SnapshotSequence& s, const SnapshotSequence& sp, double omega,
                          double nu, double xi, int max_iter, double tol,
                          std::vector<double>* per_snapshot) {
  if (s.empty() || sp.empty()) throw std::invalid_argument("empty snapshot sequence");
  if (s.size() != sp.size()) throw std::invalid_argument("snapshot subdivisions differ in length");
  std::vector<double> phis;
  phis.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i].day != sp[i].day)
      throw std::invalid_argument("snapshot subdivisions disagree on days");
    phis.push_back(solve_match(s[i], sp[i], nu, xi, max_iter, tol).phi);
  }
  if (per_snapshot) *per_snapshot = phis;
  return weighted_temporal_mean(phis, omega);
}

}  // namespace epinet
