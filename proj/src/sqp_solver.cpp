#include "kstcp/sqp_solver.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace kstcp {

namespace {

constexpr double kSlopeFloor = -1e-14;
constexpr double kStepGuard = 1e-14;
constexpr double kMaxCondition = 1e12;
constexpr int kMaxRelaxations = 30;

double negative_part_norm1(const Vector& x) { return (-x).cwiseMax(0.0).sum(); }

double infeasibility(const TCPProblem& p, const Vector& x) {
  return constraint_h(p, x).lpNorm<1>() + negative_part_norm1(x);
}

// Uniform in (0, 1) from the top 53 bits; never returns 0 or 1.
double open_unit(std::mt19937_64& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

bool better(const SolveReport& a, const SolveReport& b) {
  if (a.l0 != b.l0) return a.l0 < b.l0;
  const double sa = a.x_star.sum(), sb = b.x_star.sum();
  if (sa != sb) return sa < sb;
  return a.iterations < b.iterations;
}

}  // namespace

TCPProblem::TCPProblem(Tensor A_, Vector q_, std::string name_)
    : A(std::move(A_)), q(std::move(q_)), name(std::move(name_)) {
  if (q.size() != A.dim()) {
    throw std::invalid_argument("q has length " + std::to_string(q.size()) +
                                " but the tensor dimension is " + std::to_string(A.dim()));
  }
  for (int i = 0; i < q.size(); ++i) {
    if (!(q[i] >= 0.0) || !std::isfinite(q[i])) {
      throw std::invalid_argument(
          "q must be a finite nonnegative vector (component " + std::to_string(i + 1) +
          " is " + std::to_string(q[i]) +
          "); for q with negative entries x = 0 is trivially the sparsest solution");
    }
  }
}

void classify_problem(TCPProblem& p, int num_samples, std::uint64_t seed) {
  p.tags.ks = is_ks_tensor(p.A, num_samples, seed).verdict;
  p.tags.condition2 = satisfies_condition2(p.A).verdict;
  p.tags.w_m_tensor = is_nonsingular_m_tensor(ks_split(p.A).W).verdict;
}

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::kkt: return "kkt";
    case SolveStatus::max_iter: return "max_iter";
    case SolveStatus::linesearch_fail: return "linesearch_fail";
    case SolveStatus::qp_fail: return "qp_fail";
  }
  return "unknown";
}

double TCPResiduals::violation() const {
  return std::max({0.0, -min_x, -min_w, complementarity});
}

bool TCPResiduals::valid(double tol) const {
  return min_x >= -tol && min_w >= -tol && complementarity <= tol;
}

Vector constraint_h(const TCPProblem& p, const Vector& x) {
  return contract_to_vector(p.A, x) - p.q;
}

Matrix constraint_jacobian(const TCPProblem& p, const Vector& x) { return jacobian(p.A, x); }

double merit_phi(const TCPProblem& p, const Vector& x, double sigma) {
  return x.sum() + infeasibility(p, x) / sigma;
}

double merit_directional_derivative(const TCPProblem& p, const Vector& x, const Vector& d,
                                    double sigma, double theta) {
  const double h1 = constraint_h(p, x).lpNorm<1>();
  return d.sum() - (theta * h1 + negative_part_norm1(x)) / sigma;
}

double update_penalty(double sigma_prev, const Vector& mu, const Vector& lam, double delta) {
  const double tau = std::max(mu.size() ? mu.lpNorm<Eigen::Infinity>() : 0.0,
                              lam.size() ? lam.lpNorm<Eigen::Infinity>() : 0.0);
  if (1.0 / sigma_prev >= tau + delta) return sigma_prev;
  return 1.0 / (tau + 2.0 * delta);
}

Multipliers least_squares_multipliers(const Matrix& Aeq, const Vector& grad_f) {
  // (A A' + tI)^{-1} A = A (A'A + tI)^{-1}, and A'A = Aeq'Aeq + I is SPD.
  const int n = static_cast<int>(grad_f.size());
  Matrix normal = Aeq.transpose() * Aeq + Matrix::Identity(n, n);
  Eigen::LLT<Matrix> llt(normal);
  Vector w;
  if (llt.info() == Eigen::Success) {
    w = llt.solve(grad_f);
  }
  if (llt.info() != Eigen::Success || !w.allFinite()) {
    normal += 1e-10 * Matrix::Identity(n, n);
    w = normal.colPivHouseholderQr().solve(grad_f);
    if (!w.allFinite()) return Multipliers{Vector::Zero(n), Vector::Zero(n), false};
  }
  return Multipliers{Aeq * w, w, true};
}

Matrix damped_bfgs(const Matrix& B, const Vector& s, const Vector& y) {
  if (s.norm() <= kStepGuard) return B;
  const Vector Bs = B * s;
  const double sBs = s.dot(Bs);
  const double sy = s.dot(y);
  const double theta = sy >= 0.2 * sBs ? 1.0 : 0.8 * sBs / (sBs - sy);
  const Vector z = theta * y + (1.0 - theta) * Bs;
  Matrix next = B - (Bs * Bs.transpose()) / sBs + (z * z.transpose()) / s.dot(z);
  next = 0.5 * (next + next.transpose());
  // Exact arithmetic keeps next SPD; with badly scaled s, y cancellation can
  // break that, in which case the update is skipped.
  if (!next.allFinite()) return B;
  const Vector ev = Eigen::SelfAdjointEigenSolver<Matrix>(next, Eigen::EigenvaluesOnly).eigenvalues();
  if (!(ev[0] > 0.0) || ev[ev.size() - 1] > kMaxCondition * ev[0]) return B;
  return next;
}

Vector lagrangian_gradient(const TCPProblem& p, const Vector& x, const Vector& mu,
                           const Vector& lam) {
  return Vector::Ones(x.size()) - constraint_jacobian(p, x).transpose() * mu - lam;
}

TCPResiduals verify_tcp_solution(const TCPProblem& p, const Vector& x) {
  const Vector w = constraint_h(p, x);
  TCPResiduals r;
  r.min_x = x.minCoeff();
  r.min_w = w.minCoeff();
  r.complementarity = std::abs(x.dot(w));
  r.equation_inf = w.lpNorm<Eigen::Infinity>();
  return r;
}

int sparsity(const Vector& x, double threshold) {
  return static_cast<int>((x.array().abs() > threshold).count());
}

SolveReport sqp_solve(const TCPProblem& p, const Vector& x0, const Vector& mu0,
                      const Vector& lam0, const SQPConfig& cfg) {
  const int n = p.dim();
  if (x0.size() != n || mu0.size() != n || lam0.size() != n) {
    throw std::invalid_argument("sqp_solve: start vectors must have length n");
  }
  SolveReport report;
  report.start_point = x0;

  Vector x = x0, mu = mu0, lam = lam0;
  Matrix B = Matrix::Identity(n, n);
  double sigma = cfg.sigma0;
  const Vector e = Vector::Ones(n);
  SolveStatus status = SolveStatus::max_iter;
  double d_norm1 = 0.0;
  int k = 0;

  for (; k < cfg.max_iter; ++k) {
    const Vector h = constraint_h(p, x);
    QPData qp{B, e, constraint_jacobian(p, x), h, x};
    QPResult sub = solve_qp(qp, default_start(n, cfg.qp.eps0), cfg.qp);
    // An infeasible linearization (the Newton point leaves x >= 0) is retried
    // with theta h + Aeq d = 0 for theta = 1/2, 1/4, ...
    // When Aeq is invertible the feasible theta are known up front, which
    // spares the failed solves.
    double theta = 1.0;
    int relaxations = 0;
    if (sub.status != QPStatus::converged) {
      theta = 0.5;
      relaxations = 1;
      Eigen::FullPivLU<Matrix> lu(qp.Aeq);
      if (lu.isInvertible() && lu.rcond() > 1e-12) {
        const Vector dn = lu.solve(-h);
        while (relaxations < kMaxRelaxations && ((x + theta * dn).array() < 0.0).any()) {
          theta *= 0.5;
          ++relaxations;
        }
      }
      qp.h = theta * h;
      sub = solve_qp(qp, default_start(n, cfg.qp.eps0), cfg.qp);
    }
    for (; sub.status != QPStatus::converged && relaxations < kMaxRelaxations; ++relaxations) {
      theta *= 0.5;
      qp.h = theta * h;
      sub = solve_qp(qp, default_start(n, cfg.qp.eps0), cfg.qp);
    }
    report.last_qp_status = sub.status;
    report.last_qp_residual = sub.residual_norm;
    if (sub.status != QPStatus::converged) {
      status = SolveStatus::qp_fail;
      break;
    }
    const Vector& d = sub.d;
    d_norm1 = d.lpNorm<1>();
    if (d_norm1 <= cfg.eps1 && h.lpNorm<1>() + negative_part_norm1(x) <= cfg.eps2) {
      status = SolveStatus::kkt;
      break;
    }

    sigma = update_penalty(sigma, mu, lam, cfg.delta);
    const double slope = merit_directional_derivative(p, x, d, sigma, theta);
    const double phi0 = merit_phi(p, x, sigma);
    double alpha = 1.0;
    double phi_new = merit_phi(p, x + d, sigma);
    const bool fallback = slope > kSlopeFloor;
    bool accepted = fallback;
    for (int m = 0; !accepted && m < cfg.max_backtracks; ++m) {
      phi_new = merit_phi(p, x + alpha * d, sigma);
      if (phi_new - phi0 <= cfg.eta * alpha * slope) {
        accepted = true;
      } else {
        alpha *= cfg.rho;
      }
    }
    if (!accepted) {
      status = SolveStatus::linesearch_fail;
      break;
    }

    const Vector s = alpha * d;
    const Vector x_next = x + s;
    Multipliers mult = least_squares_multipliers(constraint_jacobian(p, x_next), e);
    if (mult.ok) {
      mu = mult.mu;
      lam = mult.lam;
    }
    const Vector y =
        lagrangian_gradient(p, x_next, mu, lam) - lagrangian_gradient(p, x, mu, lam);
    B = damped_bfgs(B, s, y);

    if (cfg.record_trace) {
      SQPIterate it;
      it.x = x;
      it.sigma = sigma;
      it.slope = slope;
      it.alpha = alpha;
      it.merit_before = phi0;
      it.merit_after = phi_new;
      it.d_norm1 = d_norm1;
      it.slope_fallback = fallback;
      it.qp_status = sub.status;
      it.qp_iterations = sub.iterations;
      it.theta = theta;
      Eigen::SelfAdjointEigenSolver<Matrix> eig(B);
      it.B_min_eig = eig.eigenvalues().minCoeff();
      it.B_condition = eig.eigenvalues().maxCoeff() / it.B_min_eig;
      report.trace.push_back(std::move(it));
    }
    x = x_next;
  }

  report.x_star = x;
  report.mu = mu;
  report.lam = lam;
  report.iterations = k;
  report.status = status;
  report.d_norm1 = d_norm1;
  report.feasibility = infeasibility(p, x);
  report.residuals = verify_tcp_solution(p, x);
  report.l0 = sparsity(x, cfg.sparsity_threshold);
  return report;
}

bool is_success(const SolveReport& r, const SQPConfig& cfg) {
  return r.status == SolveStatus::kkt && r.residuals.violation() <= cfg.eps2;
}

StartPoint multistart_point(int n, std::uint64_t seed, int index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index)};
  std::mt19937_64 rng(seq);
  StartPoint sp{Vector(n), Vector(n), Vector(n)};
  for (int i = 0; i < n; ++i) sp.x0[i] = open_unit(rng);
  for (int i = 0; i < n; ++i) sp.mu0[i] = open_unit(rng);
  for (int i = 0; i < n; ++i) sp.lam0[i] = open_unit(rng);
  return sp;
}

MultistartResult multistart_sparse(const TCPProblem& p, int n_starts, std::uint64_t seed,
                                   const SQPConfig& cfg) {
  if (n_starts < 1) throw std::invalid_argument("multistart needs at least one start");
  if ((p.q.array() == 0.0).all()) {
    throw std::invalid_argument(
        "q = 0: the zero vector is always the sparsest solution, nothing to solve");
  }
  MultistartResult out;
  out.runs.reserve(n_starts);
  for (int s = 0; s < n_starts; ++s) {
    const StartPoint sp = multistart_point(p.dim(), seed, s);
    out.runs.push_back(sqp_solve(p, sp.x0, sp.mu0, sp.lam0, cfg));
    const SolveReport& r = out.runs.back();
    if (!is_success(r, cfg)) continue;
    ++out.successes;
    if (out.best_index < 0 || better(r, out.runs[out.best_index])) out.best_index = s;
  }
  out.success_rate = static_cast<double>(out.successes) / n_starts;
  out.best = out.runs[out.best_index >= 0 ? out.best_index : 0];
  return out;
}

}  // namespace kstcp
