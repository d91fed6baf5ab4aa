#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>

#include "kstcp/tensor.hpp"

namespace kstcp {

enum class Verdict { certified_true, certified_false, supported, refuted, unknown };

std::string_view to_string(Verdict v);

/// True for certified_true and supported.
bool is_positive(Verdict v);
/// True for certified_false and refuted.
bool is_negative(Verdict v);

/// Scalar s and the bracket lo <= rho(s I - A) <= hi used by the spectral test.
struct SpectralBracket {
  double s = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

using Evidence = std::variant<std::monostate, Vector, MultiIndex, SpectralBracket>;

struct Certificate {
  Verdict verdict = Verdict::unknown;
  Evidence evidence;
  std::string method;
  std::string note;
};

/// A = W + N with W the comparison (Z) part and N the nonnegative remainder.
struct KSDecomposition {
  Tensor W;
  Tensor N;
  Verdict condition2 = Verdict::unknown;
};

inline constexpr int kDefaultSamples = 1000;
inline constexpr std::uint64_t kDefaultSeed = 42;

Certificate is_nonnegative(const Tensor& A);

/// Off-diagonal entries non-positive; the diagonal is unconstrained.
Certificate is_z_tensor(const Tensor& A);

/// W keeps the diagonal and the non-positive off-diagonal entries of A.
KSDecomposition ks_split(const Tensor& A);

/// x > 0 and A x^{m-1} > 0 componentwise.
bool verify_m_tensor_witness(const Tensor& A, const Vector& x);

/**
 * Nonsingular M-tensor test for a Z-tensor.
 *
 * Stage one looks for a positive x with A x^{m-1} > 0 (x = e, then damped
 * Newton on A x^{m-1} = e). Stage two writes A = s I - B with s the largest
 * diagonal entry and compares s with the spectral-radius bracket of B:
 * certified_true when s > hi, certified_false when s <= lo, unknown between.
 */
Certificate is_nonsingular_m_tensor(const Tensor& A);

/**
 * Sampled P-tensor test: looks for x != 0 with x_i (A x^{m-1})_i <= 0 at every
 * i where x_i != 0. Candidates are the sign patterns of e (n <= 16), the
 * signed unit vectors and `num_samples` uniform points on the sphere.
 *
 * A Z-tensor is first given to the M-tensor test, and a certified M-tensor is
 * reported certified_true without sampling (this also happens for odd m).
 * Otherwise a counterexample gives `refuted`; without one, Z-tensors keep the
 * M-test verdict and all other tensors are `supported`.
 */
Certificate is_p_tensor_sampled(const Tensor& A, int num_samples = kDefaultSamples,
                                std::uint64_t seed = kDefaultSeed);

/// Sampled P-test combined with the M-tensor test on the W part; the weaker
/// of the two verdicts wins.
Certificate is_ks_tensor(const Tensor& A, int num_samples = kDefaultSamples,
                         std::uint64_t seed = kDefaultSeed);

/**
 * Row-sum condition: for every i and tail (i2..im) with im != i, the sum of the
 * entries obtained by inserting i at each of the m positions of the tail is
 * <= 0. Only tails touched by stored entries can be nonzero, so the check runs
 * over the sparse entries rather than all n^m tuples.
 * On failure the witness is (i, i2, ..., im).
 */
Certificate satisfies_condition2(const Tensor& A);

/// Sum over the m insertion positions of i into `tail` (the condition-2 sum).
double insertion_sum(const Tensor& A, int i, const MultiIndex& tail);

/// Samples x in [0, 10]^n and refutes when the Jacobian of A x^{m-1} has an
/// off-diagonal entry above 1e-12.
Certificate z_function_check(const Tensor& A, int num_samples = kDefaultSamples,
                             std::uint64_t seed = kDefaultSeed);

/// Largest x_i (A x^{m-1})_i over the i with x_i != 0; -inf when x = 0.
double p_tensor_margin(const Tensor& A, const Vector& x);

}  // namespace kstcp
