#pragma once

#include "kstcp/tensor.hpp"

namespace kstcp {

/**
 * Quadratic subproblem
 *
 *   min 1/2 d'Bd + c'd   s.t.   h + Aeq d = 0,   g + d >= 0.
 *
 * B is symmetric positive definite; all blocks are n x n or length n.
 */
struct QPData {
  Matrix B;
  Vector c;
  Matrix Aeq;
  Vector h;
  Vector g;

  int dim() const { return static_cast<int>(c.size()); }
  /// Throws std::invalid_argument on inconsistent sizes or asymmetric B.
  void validate() const;
};

/// Iterate z = (eps, d, mu, lam) of the smoothing Newton method.
struct SmoothedKKTState {
  double eps = 0.0;
  Vector d;
  Vector mu;
  Vector lam;
};

struct SmoothingNewtonConfig {
  double rho = 0.5;    ///< backtracking factor
  double sigma = 0.8;  ///< sufficient-decrease constant
  double gamma = 0.2;  ///< upper bound for the beta(z) scale; shrunk at start
  double eps0 = 1.0;   ///< initial smoothing parameter
  double tol = 1e-10;  ///< stop when ||H(z)||_2 <= tol (or the rounding floor at z, if larger)
  int max_iter = 200;
};

enum class QPStatus { converged, max_iter, singular_jacobian };

const char* to_string(QPStatus s);

struct QPResult {
  Vector d;
  Vector mu;
  Vector lam;
  QPStatus status = QPStatus::max_iter;
  int iterations = 0;
  double residual_norm = 0.0;
  /// Jacobian evaluations that hit the nonsmooth kink (eps = lam_i = t_i = 0).
  int kink_events = 0;
  /// ||H|| after each accepted step, starting with ||H(z0)||.
  std::vector<double> residual_history;
  /// eps after each accepted step, starting with eps0.
  std::vector<double> eps_history;
};

/// phi(eps, t, lam) = lam + t - sqrt(lam^2 + t^2 + 2 eps^2).
double smoothed_complementarity(double eps, double t, double lam);

/// H(z) = (eps; Bd - Aeq'mu - lam + c; h + Aeq d; Phi(eps, d, lam)), length 1 + 3n.
Vector residual_H(const SmoothedKKTState& z, const QPData& qp);

/**
 * Jacobian of residual_H with row blocks
 *   [1 0 0 0; 0 B -Aeq' -I; 0 Aeq 0 0; v D2 0 D1].
 * At the kink (eps = lam_i = t_i = 0) the generalized-Jacobian element
 * a_i = b_i = 1, v_i = 0 is used and `kinks` (if given) is incremented.
 */
Matrix jacobian_H(const SmoothedKKTState& z, const QPData& qp, int* kinks = nullptr);

/// beta(z) = gamma ||H(z)|| min(1, ||H(z)||).
double beta_of_z(const SmoothedKKTState& z, const QPData& qp, double gamma);

/// d = 0, mu = 0, lam = e, eps = eps0.
SmoothedKKTState default_start(int n, double eps0 = 1.0);

/**
 * Smoothing Newton method on H(z) = 0.
 *
 * Each step solves H'(z) dz = beta(z) zbar - H(z) with zbar = (eps0, 0, 0, 0)
 * and backtracks until ||H(z + a dz)|| <= (1 - sigma (1 - gamma eps0) a) ||H(z)||.
 * gamma is reduced at start so that gamma eps0 < 1 and gamma ||H(z0)|| < 1.
 * Newton systems are equilibrated and solved by full-pivot LU; one that still
 * fails a backward-error check is retried with 1e-10 I added. A stalled line
 * search ends the solve with status max_iter unless z already meets the
 * stopping test.
 */
QPResult solve_qp(const QPData& qp, const SmoothedKKTState& start,
                  const SmoothingNewtonConfig& cfg = {});

}  // namespace kstcp
