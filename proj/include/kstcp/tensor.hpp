#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <vector>

#include <Eigen/Dense>

namespace kstcp {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Zero-based index tuple (i1, ..., im) into an order-m tensor.
using MultiIndex = std::vector<int>;

/// Largest n^m for which dense enumeration is allowed.
inline constexpr double kDenseEnumerationLimit = 1e6;

/**
 * Real tensor of order m and dimension n in sparse coordinate form.
 *
 * Entries are kept in lexicographic index order. Absent tuples are zero and
 * setting an entry to zero removes it, so `nnz()` counts structural nonzeros.
 */
class Tensor {
 public:
  Tensor(int order, int dim);

  static Tensor identity(int order, int dim);
  /// All-ones tensor; dense, so n^m must respect kDenseEnumerationLimit.
  static Tensor ones(int order, int dim);

  int order() const { return order_; }
  int dim() const { return dim_; }
  std::size_t nnz() const { return entries_.size(); }
  const std::map<MultiIndex, double>& entries() const { return entries_; }

  double operator()(const MultiIndex& index) const;
  void set(const MultiIndex& index, double value);
  void add(const MultiIndex& index, double value);

  bool is_nonnegative() const;
  double max_abs() const;

  Tensor operator+(const Tensor& other) const;
  Tensor operator-(const Tensor& other) const;
  Tensor operator*(double scale) const;

  bool operator==(const Tensor& other) const = default;

  /// True when i1 = i2 = ... = im.
  static bool is_diagonal(const MultiIndex& index);

 private:
  void check_index(const MultiIndex& index) const;
  void check_same_shape(const Tensor& other) const;

  int order_;
  int dim_;
  std::map<MultiIndex, double> entries_;
};

/// Visits every tuple in [0, dim)^order in lexicographic order.
/// Throws std::length_error when dim^order exceeds `limit`.
void for_each_multi_index(int order, int dim,
                          const std::function<void(const MultiIndex&)>& visit,
                          double limit = kDenseEnumerationLimit);

/// (A x^{m-1})_i = sum a_{i i2..im} x_{i2} ... x_{im}.
Vector contract_to_vector(const Tensor& A, const Vector& x);

/// M_ij = sum a_{i j i3..im} x_{i3} ... x_{im}. For m = 2 this is A itself.
Matrix contract_to_matrix(const Tensor& A, const Vector& x);

/// Averages A over all permutations of its last m-1 indices.
Tensor partial_symmetrize(const Tensor& A);

/**
 * Jacobian of x -> A x^{m-1}, equal to (m-1) * contract_to_matrix(
 * partial_symmetrize(A), x). Evaluated entry by entry with the product rule so
 * the (m-1)! symmetrization is never formed.
 */
Matrix jacobian(const Tensor& A, const Vector& x);

struct SpectralRadius {
  double rho = 0.0;
  double lo = 0.0;  ///< lo <= rho(B)
  double hi = 0.0;  ///< rho(B) <= hi
  int iterations = 0;
  bool converged = false;
};

/**
 * Spectral radius of a nonnegative tensor by the NQZ power iteration
 * x <- (B x^{m-1})^{[1/(m-1)]} from x = e.
 *
 * Every iterate yields Collatz bounds min_i/max_i (B x^{m-1})_i / x_i^{m-1};
 * the running best of these is returned as [lo, hi]. When an iterate loses
 * strict positivity (reducible B) the iteration restarts on B + s0 I with
 * s0 = 1e-8 max|b|, subtracts s0 afterwards and widens the bracket by s0.
 * Throws std::invalid_argument when B has a negative entry.
 */
SpectralRadius spectral_radius_nonneg(const Tensor& B, double tol = 1e-10,
                                      int max_iter = 10000);

}  // namespace kstcp
