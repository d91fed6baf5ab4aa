#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "kstcp/classify.hpp"
#include "kstcp/qp_subproblem.hpp"
#include "kstcp/tensor.hpp"

namespace kstcp {

/// Cached classification results attached to a problem.
struct ProblemTags {
  std::optional<Verdict> ks;
  std::optional<Verdict> condition2;
  std::optional<Verdict> w_m_tensor;
};

/**
 * Tensor complementarity problem: find x >= 0 with A x^{m-1} - q >= 0 and
 * x'(A x^{m-1} - q) = 0. Only q >= 0 is accepted; for other q the zero vector
 * already solves the problem.
 */
struct TCPProblem {
  TCPProblem(Tensor A, Vector q, std::string name = {});

  Tensor A;
  Vector q;
  std::string name;
  std::string notes;
  ProblemTags tags;

  int dim() const { return A.dim(); }
  bool operator==(const TCPProblem& other) const { return A == other.A && q == other.q; }
};

/// Fills p.tags with the KS, condition-2 and W M-tensor verdicts.
void classify_problem(TCPProblem& p, int num_samples = kDefaultSamples,
                      std::uint64_t seed = kDefaultSeed);

struct SQPConfig {
  double eta = 0.1;     ///< Armijo constant in (0, 1/2)
  double rho = 0.5;     ///< backtracking factor
  double eps1 = 1e-6;   ///< stop when ||d||_1 <= eps1 ...
  double eps2 = 1e-5;   ///< ... and ||h||_1 + ||x_-||_1 <= eps2
  double delta = 1.0;   ///< penalty slack
  double sigma0 = 0.8;  ///< initial penalty parameter
  int max_iter = 500;
  double sparsity_threshold = 1e-6;
  int max_backtracks = 50;
  bool record_trace = false;
  SmoothingNewtonConfig qp;
};

enum class SolveStatus { kkt, max_iter, linesearch_fail, qp_fail };

const char* to_string(SolveStatus s);

/// Residuals of the complementarity system at a point.
struct TCPResiduals {
  double min_x = 0.0;           ///< min_i x_i
  double min_w = 0.0;           ///< min_i (A x^{m-1} - q)_i
  double complementarity = 0.0; ///< |x'(A x^{m-1} - q)|
  double equation_inf = 0.0;    ///< ||A x^{m-1} - q||_inf

  /// Largest violation of x >= 0, w >= 0, x'w = 0.
  double violation() const;
  bool valid(double tol) const;
};

/// One outer iteration, recorded when SQPConfig::record_trace is set.
struct SQPIterate {
  Vector x;
  double sigma = 0.0;
  double slope = 0.0;        ///< merit directional derivative D
  double alpha = 0.0;
  double merit_before = 0.0; ///< phi(x_k, sigma_k)
  double merit_after = 0.0;  ///< phi(x_{k+1}, sigma_k)
  double d_norm1 = 0.0;
  double B_min_eig = 0.0;
  double B_condition = 0.0;
  bool slope_fallback = false;  ///< D > -1e-14, step taken with alpha = 1
  QPStatus qp_status = QPStatus::converged;
  int qp_iterations = 0;
  double theta = 1.0;  ///< relaxation of the linearized equality (1 = none)
};

struct SolveReport {
  Vector x_star;
  Vector mu;
  Vector lam;
  int iterations = 0;
  SolveStatus status = SolveStatus::max_iter;
  double d_norm1 = 0.0;
  double feasibility = 0.0;  ///< ||h(x*)||_1 + ||x*_-||_1
  TCPResiduals residuals;
  int l0 = 0;
  Vector start_point;
  QPStatus last_qp_status = QPStatus::converged;  ///< status of the final subproblem
  double last_qp_residual = 0.0;
  std::vector<SQPIterate> trace;
};

/// h(x) = A x^{m-1} - q.
Vector constraint_h(const TCPProblem& p, const Vector& x);

/// Jacobian of h, (m-1) bar-A x^{m-2}.
Matrix constraint_jacobian(const TCPProblem& p, const Vector& x);

/// phi(x, sigma) = e'x + (||h(x)||_1 + ||max(0, -x)||_1) / sigma.
double merit_phi(const TCPProblem& p, const Vector& x, double sigma);

/// D = e'd - (theta ||h(x)||_1 + ||max(0, -x)||_1) / sigma, where d solves the
/// subproblem with linearized constraint theta h + Aeq d = 0.
double merit_directional_derivative(const TCPProblem& p, const Vector& x,
                                    const Vector& d, double sigma, double theta = 1.0);

/// sigma_prev if 1/sigma_prev >= tau + delta, else 1/(tau + 2 delta), where
/// tau = max(||mu||_inf, ||lam||_inf).
double update_penalty(double sigma_prev, const Vector& mu, const Vector& lam, double delta);

struct Multipliers {
  Vector mu;
  Vector lam;
  bool ok = true;
};

/**
 * Least-squares multipliers: the minimum-norm (mu; lam) with
 * Aeq' mu + lam = grad_f, i.e. the limit of (A A' + tI)^{-1} A grad_f for
 * A = [Aeq; I]. Falls back to 1e-10 Tikhonov regularization; `ok` is false
 * when even that fails.
 */
Multipliers least_squares_multipliers(const Matrix& Aeq, const Vector& grad_f);

/**
 * Powell-damped BFGS update. Returns B unchanged when ||s|| <= 1e-14, or
 * when rounding leaves the update non-finite, not positive definite, or with
 * condition number above 1e12.
 * theta = 1 if s'y >= 0.2 s'Bs, else 0.8 s'Bs / (s'Bs - s'y); z = theta y +
 * (1 - theta) Bs; B+ = B - Bss'B / s'Bs + zz' / s'z.
 */
Matrix damped_bfgs(const Matrix& B, const Vector& s, const Vector& y);

/// grad_x L(x, mu, lam) = e - J(x)' mu - lam.
Vector lagrangian_gradient(const TCPProblem& p, const Vector& x, const Vector& mu,
                           const Vector& lam);

TCPResiduals verify_tcp_solution(const TCPProblem& p, const Vector& x);

/// Number of |x_i| above `threshold`.
int sparsity(const Vector& x, double threshold);

/// SQP for min e'x s.t. A x^{m-1} = q, x >= 0 from (x0, mu0, lam0).
SolveReport sqp_solve(const TCPProblem& p, const Vector& x0, const Vector& mu0,
                      const Vector& lam0, const SQPConfig& cfg = {});

/// status kkt and complementarity violation <= eps2.
bool is_success(const SolveReport& r, const SQPConfig& cfg);

struct StartPoint {
  Vector x0;
  Vector mu0;
  Vector lam0;
};

/// Start `index` of a seeded multistart, all components uniform in (0, 1).
/// Bit-reproducible across platforms.
StartPoint multistart_point(int n, std::uint64_t seed, int index);

struct MultistartResult {
  SolveReport best;
  std::vector<SolveReport> runs;
  int successes = 0;
  double success_rate = 0.0;
  /// Index into `runs` of the best report; -1 when no run succeeded.
  int best_index = -1;
};

/**
 * Runs sqp_solve from `n_starts` seeded starts and keeps the sparsest
 * successful run (ties: smaller e'x, then fewer iterations). With no success
 * the best report is the first run. Throws std::invalid_argument for q = 0.
 */
MultistartResult multistart_sparse(const TCPProblem& p, int n_starts, std::uint64_t seed,
                                   const SQPConfig& cfg = {});

}  // namespace kstcp
