#pragma once

// Independent reference implementations used by the unit and acceptance
// tests. Nothing here calls into the library code under test except for
// Tensor storage and the function being differentiated.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include "kstcp/qp_subproblem.hpp"
#include "kstcp/tensor.hpp"

namespace oracle {

using kstcp::Matrix;
using kstcp::MultiIndex;
using kstcp::Tensor;
using kstcp::Vector;

inline bool next_index(MultiIndex& idx, int n) {
  for (int p = static_cast<int>(idx.size()) - 1; p >= 0; --p) {
    if (++idx[p] < n) return true;
    idx[p] = 0;
  }
  return false;
}

/// Dense sum over every tuple: (A x^{m-1})_i.
inline Vector contract_dense(const Tensor& A, const Vector& x) {
  const int m = A.order(), n = A.dim();
  Vector y = Vector::Zero(n);
  MultiIndex idx(m, 0);
  do {
    double term = A(idx);
    for (int p = 1; p < m; ++p) term *= x[idx[p]];
    y[idx[0]] += term;
  } while (next_index(idx, n));
  return y;
}

/// Dense M_ij = sum a_{i j i3..im} x_{i3}..x_{im}.
inline Matrix contract_matrix_dense(const Tensor& A, const Vector& x) {
  const int m = A.order(), n = A.dim();
  Matrix M = Matrix::Zero(n, n);
  MultiIndex idx(m, 0);
  do {
    double term = A(idx);
    for (int p = 2; p < m; ++p) term *= x[idx[p]];
    M(idx[0], idx[1]) += term;
  } while (next_index(idx, n));
  return M;
}

/// Central differences of f at x with step h.
template <class F>
Matrix central_difference(F&& f, const Vector& x, double h = 1e-5) {
  const int n = static_cast<int>(x.size());
  const Vector f0 = f(x);
  Matrix J(f0.size(), n);
  for (int j = 0; j < n; ++j) {
    Vector xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    J.col(j) = (f(xp) - f(xm)) / (2.0 * h);
  }
  return J;
}

/// Largest |J - K| relative to max(1, |K|), entry by entry.
inline double max_relative_error(const Matrix& J, const Matrix& K) {
  double worst = 0.0;
  for (int i = 0; i < J.rows(); ++i) {
    for (int j = 0; j < J.cols(); ++j) {
      worst = std::max(worst, std::abs(J(i, j) - K(i, j)) / std::max(1.0, std::abs(K(i, j))));
    }
  }
  return worst;
}

/// Random tensor with `nnz` entries uniform in [-1, 1] at random tuples.
inline Tensor random_tensor(int m, int n, int nnz, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> pick(0, n - 1);
  std::uniform_real_distribution<double> val(-1.0, 1.0);
  Tensor A(m, n);
  for (int k = 0; k < nnz; ++k) {
    MultiIndex idx(m);
    for (int& i : idx) i = pick(rng);
    A.set(idx, val(rng));
  }
  return A;
}

inline Vector random_vector(int n, double lo, double hi, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(lo, hi);
  Vector x(n);
  for (int i = 0; i < n; ++i) x[i] = u(rng);
  return x;
}

/// Condition (2) by full enumeration of (i, tail) with tail.back() != i.
/// Returns the first violating (i, tail...) or nullopt.
inline std::optional<MultiIndex> condition2_violation(const Tensor& A, double tol = 1e-12) {
  const int m = A.order(), n = A.dim();
  for (int i = 0; i < n; ++i) {
    MultiIndex tail(m - 1, 0);
    do {
      if (tail.back() == i) continue;
      double sum = 0.0;
      for (int pos = 0; pos < m; ++pos) {
        MultiIndex full;
        full.insert(full.end(), tail.begin(), tail.begin() + pos);
        full.push_back(i);
        full.insert(full.end(), tail.begin() + pos, tail.end());
        sum += A(full);
      }
      if (sum > tol) {
        MultiIndex w{i};
        w.insert(w.end(), tail.begin(), tail.end());
        return w;
      }
    } while (next_index(tail, n));
  }
  return std::nullopt;
}

/// Solution of a convex QP min 1/2 d'Bd + c'd s.t. R d = r, d >= lb found by
/// trying every set of active bounds and keeping the KKT point.
struct ActiveSetSolution {
  Vector d;
  bool found = false;
};

inline ActiveSetSolution active_set_enumeration(const Matrix& B, const Vector& c, const Matrix& R,
                                               const Vector& r, const Vector& lb) {
  const int n = static_cast<int>(c.size());
  const int k = static_cast<int>(R.rows());
  ActiveSetSolution best;
  double best_obj = std::numeric_limits<double>::infinity();
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    std::vector<int> act;
    for (int i = 0; i < n; ++i) {
      if (mask >> i & 1u) act.push_back(i);
    }
    const int a = static_cast<int>(act.size());
    // [B  -R' -E'] [d  ]   [-c]
    // [R   0   0 ] [mu ] = [ r]
    // [E   0   0 ] [lam]   [lb_act]
    const int N = n + k + a;
    Matrix K = Matrix::Zero(N, N);
    Vector rhs = Vector::Zero(N);
    K.topLeftCorner(n, n) = B;
    K.block(0, n, n, k) = -R.transpose();
    K.block(n, 0, k, n) = R;
    rhs.head(n) = -c;
    rhs.segment(n, k) = r;
    for (int t = 0; t < a; ++t) {
      K(act[t], n + k + t) = -1.0;
      K(n + k + t, act[t]) = 1.0;
      rhs[n + k + t] = lb[act[t]];
    }
    Eigen::FullPivLU<Matrix> lu(K);
    if (!lu.isInvertible()) continue;
    const Vector sol = lu.solve(rhs);
    const Vector d = sol.head(n);
    bool ok = true;
    for (int i = 0; i < n && ok; ++i) ok = d[i] >= lb[i] - 1e-12;
    for (int t = 0; t < a && ok; ++t) ok = sol[n + k + t] >= -1e-12;
    if (!ok) continue;
    const double obj = 0.5 * d.dot(B * d) + c.dot(d);
    if (obj < best_obj) {
      best_obj = obj;
      best.d = d;
      best.found = true;
    }
  }
  return best;
}

/// Random SPD matrix with eigenvalues in [0.5, 5].
inline Matrix random_spd(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix Q(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) Q(i, j) = g(rng);
  Eigen::HouseholderQR<Matrix> qr(Q);
  const Matrix U = qr.householderQ();
  Vector ev = random_vector(n, 0.5, 5.0, rng);
  Matrix B = U * ev.asDiagonal() * U.transpose();
  return 0.5 * (B + B.transpose());
}

/// Feasible random QP in the solver's n x n layout: the first k rows of Aeq
/// are random, the rest zero (with h = 0 there), so bounds can be active.
struct RandomQP {
  kstcp::QPData qp;
  Matrix R;
  Vector r;
};

inline RandomQP random_qp(int n, int k, std::mt19937_64& rng) {
  RandomQP out;
  const Matrix B = random_spd(n, rng);
  const Vector c = random_vector(n, -2.0, 2.0, rng);
  Matrix R(k, n);
  for (int i = 0; i < k; ++i) R.row(i) = random_vector(n, -1.0, 1.0, rng).transpose();
  const Vector g = random_vector(n, 0.0, 1.0, rng);
  // a feasible point d0 >= -g fixes the right-hand side
  const Vector d0 = random_vector(n, 0.0, 1.0, rng) - g;
  const Vector r = R * d0;
  Matrix Aeq = Matrix::Zero(n, n);
  Vector h = Vector::Zero(n);
  Aeq.topRows(k) = R;
  h.head(k) = -r;
  out.qp = kstcp::QPData{B, c, Aeq, h, g};
  out.R = R;
  out.r = r;
  return out;
}

}  // namespace oracle
