#include "kstcp/qp_subproblem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>

namespace kstcp {

namespace {

constexpr double kRegularization = 1e-10;
constexpr double kBackwardErrorTol = 1e-8;
constexpr int kMaxBacktracks = 60;
constexpr double kNoiseFactor = 100.0;

Vector pack(const SmoothedKKTState& z) {
  const int n = static_cast<int>(z.d.size());
  Vector out(1 + 3 * n);
  out[0] = z.eps;
  out.segment(1, n) = z.d;
  out.segment(1 + n, n) = z.mu;
  out.segment(1 + 2 * n, n) = z.lam;
  return out;
}

SmoothedKKTState unpack(const Vector& v, int n) {
  return SmoothedKKTState{v[0], v.segment(1, n), v.segment(1 + n, n),
                          v.segment(1 + 2 * n, n)};
}

// Newton systems here mix entries from 1e-40 (a vanishing Aeq row) to 1e30
// (the matching multiplier), so rows and columns are equilibrated before a
// full-pivot LU. In an exactly singular direction the step component is 0.
std::optional<Vector> solve_checked(const Matrix& M, const Vector& rhs) {
  const int N = static_cast<int>(M.rows());
  Vector r = Vector::Ones(N), c = Vector::Ones(N);
  Matrix S = M;
  for (int sweep = 0; sweep < 8; ++sweep) {
    for (int i = 0; i < N; ++i) {
      const double a = S.row(i).cwiseAbs().maxCoeff();
      if (a > 0.0) { S.row(i) /= std::sqrt(a); r[i] /= std::sqrt(a); }
    }
    for (int j = 0; j < N; ++j) {
      const double a = S.col(j).cwiseAbs().maxCoeff();
      if (a > 0.0) { S.col(j) /= std::sqrt(a); c[j] /= std::sqrt(a); }
    }
  }
  const Vector b = r.cwiseProduct(rhs);
  Eigen::FullPivLU<Matrix> lu(S);
  const Vector y = lu.solve(b);
  if (!y.allFinite()) return std::nullopt;
  if ((S * y - b).norm() > kBackwardErrorTol * std::max(b.norm() + S.norm() * y.norm(), 1e-300)) {
    return std::nullopt;
  }
  return Vector(c.cwiseProduct(y));
}

// Stopping test. ||H|| <= tol, or every block at the rounding level of its
// own terms: huge multipliers (Aeq nearly rank deficient) lift the
// stationarity rows, and through lam the complementarity rows, above any
// absolute tolerance.
bool small_enough(const Vector& H, const SmoothedKKTState& z, const QPData& qp, double tol) {
  const int n = qp.dim();
  if (H.norm() <= tol) return true;
  const double unit = kNoiseFactor * std::numeric_limits<double>::epsilon();
  const Vector dual_scale = qp.B.cwiseAbs() * z.d.cwiseAbs() +
                            qp.Aeq.transpose().cwiseAbs() * z.mu.cwiseAbs() +
                            z.lam.cwiseAbs() + qp.c.cwiseAbs();
  const Vector primal_scale = qp.h.cwiseAbs() + qp.Aeq.cwiseAbs() * z.d.cwiseAbs();
  const double dual_tol = std::max(tol, unit * dual_scale.norm());
  return std::abs(H[0]) <= tol && H.segment(1, n).norm() <= dual_tol &&
         H.segment(1 + 2 * n, n).norm() <= dual_tol &&
         H.segment(1 + n, n).norm() <= std::max(tol, unit * primal_scale.norm());
}

}  // namespace

void QPData::validate() const {
  const auto n = c.size();
  if (B.rows() != n || B.cols() != n || Aeq.rows() != n || Aeq.cols() != n ||
      h.size() != n || g.size() != n) {
    throw std::invalid_argument("QPData: inconsistent block sizes");
  }
  if ((B - B.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, B.cwiseAbs().maxCoeff())) {
    throw std::invalid_argument("QPData: B must be symmetric");
  }
}

const char* to_string(QPStatus s) {
  switch (s) {
    case QPStatus::converged: return "converged";
    case QPStatus::max_iter: return "max_iter";
    case QPStatus::singular_jacobian: return "singular_jacobian";
  }
  return "unknown";
}

double smoothed_complementarity(double eps, double t, double lam) {
  return lam + t - std::sqrt(lam * lam + t * t + 2.0 * eps * eps);
}

Vector residual_H(const SmoothedKKTState& z, const QPData& qp) {
  const int n = qp.dim();
  Vector H(1 + 3 * n);
  H[0] = z.eps;
  H.segment(1, n) = qp.B * z.d - qp.Aeq.transpose() * z.mu - z.lam + qp.c;
  H.segment(1 + n, n) = qp.h + qp.Aeq * z.d;
  for (int i = 0; i < n; ++i) {
    H[1 + 2 * n + i] = smoothed_complementarity(z.eps, qp.g[i] + z.d[i], z.lam[i]);
  }
  return H;
}

Matrix jacobian_H(const SmoothedKKTState& z, const QPData& qp, int* kinks) {
  const int n = qp.dim();
  Matrix J = Matrix::Zero(1 + 3 * n, 1 + 3 * n);
  J(0, 0) = 1.0;
  J.block(1, 1, n, n) = qp.B;
  J.block(1, 1 + n, n, n) = -qp.Aeq.transpose();
  J.block(1, 1 + 2 * n, n, n) = -Matrix::Identity(n, n);
  J.block(1 + n, 1, n, n) = qp.Aeq;
  for (int i = 0; i < n; ++i) {
    const double t = qp.g[i] + z.d[i];
    const double lam = z.lam[i];
    const double r = std::sqrt(lam * lam + t * t + 2.0 * z.eps * z.eps);
    double v = 0.0, a = 1.0, b = 1.0;
    if (r > 0.0) {
      v = -2.0 * z.eps / r;
      a = 1.0 - lam / r;
      b = 1.0 - t / r;
    } else if (kinks != nullptr) {
      ++*kinks;
    }
    const int row = 1 + 2 * n + i;
    J(row, 0) = v;
    J(row, 1 + i) = b;
    J(row, 1 + 2 * n + i) = a;
  }
  return J;
}

double beta_of_z(const SmoothedKKTState& z, const QPData& qp, double gamma) {
  const double norm = residual_H(z, qp).norm();
  return gamma * norm * std::min(1.0, norm);
}

SmoothedKKTState default_start(int n, double eps0) {
  return SmoothedKKTState{eps0, Vector::Zero(n), Vector::Zero(n), Vector::Ones(n)};
}

QPResult solve_qp(const QPData& qp, const SmoothedKKTState& start,
                  const SmoothingNewtonConfig& cfg) {
  qp.validate();
  const int n = qp.dim();
  QPResult out;

  SmoothedKKTState z = start;
  Vector H = residual_H(z, qp);
  double norm = H.norm();
  const double gamma =
      std::min(cfg.gamma, 0.9 / std::max({cfg.eps0, norm, 1e-300}));
  const double contraction = cfg.sigma * (1.0 - gamma * cfg.eps0);
  Vector zbar = Vector::Zero(1 + 3 * n);
  zbar[0] = cfg.eps0;

  out.residual_history.push_back(norm);
  out.eps_history.push_back(z.eps);

  auto finish = [&](QPStatus status) {
    out.d = z.d;
    out.mu = z.mu;
    out.lam = z.lam;
    out.status = status;
    out.residual_norm = norm;
    return out;
  };

  auto done = [&] { return small_enough(H, z, qp, cfg.tol); };

  for (int j = 0; j < cfg.max_iter; ++j) {
    if (done()) return finish(QPStatus::converged);
    out.iterations = j + 1;

    const double beta = gamma * norm * std::min(1.0, norm);
    const Matrix J = jacobian_H(z, qp, &out.kink_events);
    const Vector rhs = beta * zbar - H;
    auto step = solve_checked(J, rhs);
    if (!step) {
      step = solve_checked(J + kRegularization * Matrix::Identity(J.rows(), J.cols()), rhs);
    }
    if (!step) return finish(QPStatus::singular_jacobian);

    const Vector zv = pack(z);
    double alpha = 1.0;
    bool accepted = false;
    for (int m = 0; m < kMaxBacktracks; ++m) {
      SmoothedKKTState trial = unpack(zv + alpha * *step, n);
      Vector trial_H = residual_H(trial, qp);
      const double trial_norm = trial_H.norm();
      if (trial_norm <= (1.0 - contraction * alpha) * norm) {
        z = std::move(trial);
        H = std::move(trial_H);
        norm = trial_norm;
        accepted = true;
        break;
      }
      alpha *= cfg.rho;
    }
    if (!accepted) return finish(done() ? QPStatus::converged : QPStatus::max_iter);
    out.residual_history.push_back(norm);
    out.eps_history.push_back(z.eps);
  }
  return finish(done() ? QPStatus::converged : QPStatus::max_iter);
}

}  // namespace kstcp
