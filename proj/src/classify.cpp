#include "kstcp/classify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <utility>

namespace kstcp {

namespace {

constexpr double kJacobianOffDiagonalTol = 1e-12;
constexpr int kMaxSignPatternDim = 16;
constexpr int kWitnessNewtonIterations = 100;

Certificate make(Verdict v, Evidence e, std::string method, std::string note = {}) {
  return Certificate{v, std::move(e), std::move(method), std::move(note)};
}

double max_diagonal(const Tensor& A) {
  double s = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < A.dim(); ++i) s = std::max(s, A(MultiIndex(A.order(), i)));
  return s;
}

// Damped Newton on A x^{m-1} = e from x = e, keeping x strictly positive.
// Returns a witness as soon as an iterate satisfies x > 0, A x^{m-1} > 0.
std::optional<Vector> search_positive_witness(const Tensor& A) {
  const int n = A.dim();
  const Vector target = Vector::Ones(n);
  Vector x = Vector::Ones(n);
  for (int it = 0; it < kWitnessNewtonIterations; ++it) {
    const Vector y = contract_to_vector(A, x);
    if (verify_m_tensor_witness(A, x)) return x;
    const Matrix J = jacobian(A, x);
    const Vector step = J.colPivHouseholderQr().solve(target - y);
    if (!step.allFinite() || step.norm() == 0.0) return std::nullopt;
    double alpha = 1.0;
    for (int k = 0; k < 60 && ((x + alpha * step).array() <= 0.0).any(); ++k) {
      alpha *= 0.5;
    }
    Vector next = x + alpha * step;
    if ((next.array() <= 0.0).any()) return std::nullopt;
    x = next / next.maxCoeff();
  }
  return std::nullopt;
}

}  // namespace

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::certified_true: return "certified_true";
    case Verdict::certified_false: return "certified_false";
    case Verdict::supported: return "supported";
    case Verdict::refuted: return "refuted";
    case Verdict::unknown: return "unknown";
  }
  return "unknown";
}

bool is_positive(Verdict v) {
  return v == Verdict::certified_true || v == Verdict::supported;
}

bool is_negative(Verdict v) {
  return v == Verdict::certified_false || v == Verdict::refuted;
}

Certificate is_nonnegative(const Tensor& A) {
  for (const auto& [idx, v] : A.entries()) {
    if (v < 0.0) {
      return make(Verdict::certified_false, idx, "entry_scan",
                  "negative entry " + std::to_string(v));
    }
  }
  return make(Verdict::certified_true, {}, "entry_scan");
}

Certificate is_z_tensor(const Tensor& A) {
  for (const auto& [idx, v] : A.entries()) {
    if (v > 0.0 && !Tensor::is_diagonal(idx)) {
      return make(Verdict::certified_false, idx, "entry_scan",
                  "positive off-diagonal entry " + std::to_string(v));
    }
  }
  return make(Verdict::certified_true, {}, "entry_scan");
}

KSDecomposition ks_split(const Tensor& A) {
  KSDecomposition out{Tensor(A.order(), A.dim()), Tensor(A.order(), A.dim()),
                      Verdict::unknown};
  for (const auto& [idx, v] : A.entries()) {
    if (Tensor::is_diagonal(idx) || v <= 0.0) {
      out.W.set(idx, v);
    } else {
      out.N.set(idx, v);
    }
  }
  return out;
}

bool verify_m_tensor_witness(const Tensor& A, const Vector& x) {
  if (x.size() != A.dim() || (x.array() <= 0.0).any()) return false;
  return (contract_to_vector(A, x).array() > 0.0).all();
}

Certificate is_nonsingular_m_tensor(const Tensor& A) {
  if (auto z = is_z_tensor(A); z.verdict != Verdict::certified_true) {
    return make(Verdict::certified_false, z.evidence, "not_z_tensor",
                "an M-tensor must be a Z-tensor; " + z.note);
  }
  if (auto witness = search_positive_witness(A)) {
    return make(Verdict::certified_true, *witness, "positive_witness");
  }

  const double s = max_diagonal(A);
  const Tensor B = Tensor::identity(A.order(), A.dim()) * s - A;
  const SpectralRadius sr = spectral_radius_nonneg(B);
  const SpectralBracket bracket{s, sr.lo, sr.hi};
  if (s > sr.hi) return make(Verdict::certified_true, bracket, "spectral_bracket");
  if (s <= sr.lo) return make(Verdict::certified_false, bracket, "spectral_bracket");
  return make(Verdict::unknown, bracket, "spectral_bracket",
              sr.converged ? "s inside the spectral bracket"
                           : "spectral radius iteration did not converge");
}

double p_tensor_margin(const Tensor& A, const Vector& x) {
  const Vector y = contract_to_vector(A, x);
  double best = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < x.size(); ++i) {
    if (x[i] != 0.0) best = std::max(best, x[i] * y[i]);
  }
  return best;
}

Certificate is_p_tensor_sampled(const Tensor& A, int num_samples, std::uint64_t seed) {
  const int n = A.dim();
  // Z-tensors go through the M-tensor test first; only a certified M-tensor
  // short-circuits the sampling.
  std::optional<Certificate> m_route;
  if (is_z_tensor(A).verdict == Verdict::certified_true) {
    m_route = is_nonsingular_m_tensor(A);
    m_route->method = "z_tensor_m_equivalence/" + m_route->method;
    if (m_route->verdict == Verdict::certified_true) return *m_route;
  }

  auto refutes = [&](const Vector& x) {
    return x.cwiseAbs().maxCoeff() > 0.0 && p_tensor_margin(A, x) <= 0.0;
  };
  if (n <= kMaxSignPatternDim) {
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
      Vector x(n);
      for (int i = 0; i < n; ++i) x[i] = (mask >> i) & 1u ? -1.0 : 1.0;
      if (refutes(x)) return make(Verdict::refuted, x, "sign_patterns");
    }
  }
  for (int i = 0; i < n; ++i) {
    for (double sign : {1.0, -1.0}) {
      Vector x = Vector::Zero(n);
      x[i] = sign;
      if (refutes(x)) return make(Verdict::refuted, x, "unit_vectors");
    }
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int s = 0; s < num_samples; ++s) {
    Vector x(n);
    for (int i = 0; i < n; ++i) x[i] = gauss(rng);
    const double norm = x.norm();
    if (norm == 0.0) continue;
    x /= norm;
    if (refutes(x)) return make(Verdict::refuted, x, "sphere_sampling");
  }

  if (m_route) return *m_route;
  return make(Verdict::supported, {}, "sampling",
              "no counterexample among " + std::to_string(num_samples) +
                  " sphere samples and the structured candidates");
}

Certificate is_ks_tensor(const Tensor& A, int num_samples, std::uint64_t seed) {
  const Certificate p = is_p_tensor_sampled(A, num_samples, seed);
  if (is_negative(p.verdict)) {
    return make(Verdict::refuted, p.evidence, "p_tensor/" + p.method,
                "not a P-tensor");
  }
  const Certificate m = is_nonsingular_m_tensor(ks_split(A).W);
  if (is_negative(m.verdict)) {
    return make(Verdict::refuted, m.evidence, "w_m_tensor/" + m.method,
                "W is not a nonsingular M-tensor");
  }
  if (p.verdict == Verdict::unknown || m.verdict == Verdict::unknown) {
    return make(Verdict::unknown, m.evidence, "p_tensor/" + p.method + "+w_m_tensor/" + m.method);
  }
  const Verdict v = p.verdict == Verdict::certified_true && m.verdict == Verdict::certified_true
                        ? Verdict::certified_true
                        : Verdict::supported;
  return make(v, m.evidence, "p_tensor/" + p.method + "+w_m_tensor/" + m.method);
}

double insertion_sum(const Tensor& A, int i, const MultiIndex& tail) {
  double sum = 0.0;
  MultiIndex full(tail.size() + 1);
  for (std::size_t pos = 0; pos <= tail.size(); ++pos) {
    std::copy(tail.begin(), tail.begin() + pos, full.begin());
    full[pos] = i;
    std::copy(tail.begin() + pos, tail.end(), full.begin() + pos + 1);
    sum += A(full);
  }
  return sum;
}

Certificate satisfies_condition2(const Tensor& A) {
  // (i, tail) -> (sum of inserted entries, sum of their magnitudes)
  std::map<std::pair<int, MultiIndex>, std::pair<double, double>> sums;
  for (const auto& [idx, v] : A.entries()) {
    for (std::size_t pos = 0; pos < idx.size(); ++pos) {
      MultiIndex tail;
      tail.reserve(idx.size() - 1);
      for (std::size_t q = 0; q < idx.size(); ++q) {
        if (q != pos) tail.push_back(idx[q]);
      }
      if (tail.back() == idx[pos]) continue;
      auto& acc = sums[{idx[pos], std::move(tail)}];
      acc.first += v;
      acc.second += std::abs(v);
    }
  }
  const double rounding = 64.0 * std::numeric_limits<double>::epsilon();
  for (const auto& [key, acc] : sums) {
    if (acc.first > rounding * acc.second) {
      MultiIndex witness{key.first};
      witness.insert(witness.end(), key.second.begin(), key.second.end());
      return make(Verdict::certified_false, witness, "sparse_insertion_sums",
                  "insertion sum " + std::to_string(acc.first) + " > 0");
    }
  }
  return make(Verdict::certified_true, {}, "sparse_insertion_sums");
}

Certificate z_function_check(const Tensor& A, int num_samples, std::uint64_t seed) {
  const int n = A.dim();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(0.0, 10.0);
  for (int s = 0; s < num_samples; ++s) {
    Vector x(n);
    for (int i = 0; i < n; ++i) x[i] = uniform(rng);
    const Matrix J = jacobian(A, x);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (i != j && J(i, j) > kJacobianOffDiagonalTol) {
          return make(Verdict::refuted, x, "jacobian_sampling",
                      "positive off-diagonal Jacobian entry (" + std::to_string(i + 1) +
                          "," + std::to_string(j + 1) + ")");
        }
      }
    }
  }
  return make(Verdict::supported, {}, "jacobian_sampling",
              std::to_string(num_samples) + " samples in [0,10]^n");
}

}  // namespace kstcp
