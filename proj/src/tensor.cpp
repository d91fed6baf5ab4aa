#include "kstcp/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace kstcp {

namespace {

void check_vector(const Tensor& A, const Vector& x) {
  if (x.size() != A.dim()) {
    throw std::invalid_argument("dimension mismatch: tensor dim " +
                                std::to_string(A.dim()) + ", vector dim " +
                                std::to_string(x.size()));
  }
}

double power_count(int order, int dim) {
  return std::pow(static_cast<double>(dim), static_cast<double>(order));
}

}  // namespace

Tensor::Tensor(int order, int dim) : order_(order), dim_(dim) {
  if (order < 2) throw std::invalid_argument("tensor order must be >= 2");
  if (dim < 1) throw std::invalid_argument("tensor dimension must be >= 1");
}

Tensor Tensor::identity(int order, int dim) {
  Tensor t(order, dim);
  for (int i = 0; i < dim; ++i) t.set(MultiIndex(order, i), 1.0);
  return t;
}

Tensor Tensor::ones(int order, int dim) {
  Tensor t(order, dim);
  for_each_multi_index(order, dim,
                       [&](const MultiIndex& idx) { t.set(idx, 1.0); });
  return t;
}

double Tensor::operator()(const MultiIndex& index) const {
  check_index(index);
  auto it = entries_.find(index);
  return it == entries_.end() ? 0.0 : it->second;
}

void Tensor::set(const MultiIndex& index, double value) {
  check_index(index);
  if (!std::isfinite(value)) {
    throw std::invalid_argument("tensor entries must be finite");
  }
  if (value == 0.0) {
    entries_.erase(index);
  } else {
    entries_[index] = value;
  }
}

void Tensor::add(const MultiIndex& index, double value) {
  set(index, (*this)(index) + value);
}

bool Tensor::is_nonnegative() const {
  return std::all_of(entries_.begin(), entries_.end(),
                     [](const auto& e) { return e.second >= 0.0; });
}

double Tensor::max_abs() const {
  double m = 0.0;
  for (const auto& [idx, v] : entries_) m = std::max(m, std::abs(v));
  return m;
}

Tensor Tensor::operator+(const Tensor& other) const {
  check_same_shape(other);
  Tensor out = *this;
  for (const auto& [idx, v] : other.entries_) out.add(idx, v);
  return out;
}

Tensor Tensor::operator-(const Tensor& other) const {
  return *this + other * -1.0;
}

Tensor Tensor::operator*(double scale) const {
  Tensor out(order_, dim_);
  for (const auto& [idx, v] : entries_) out.set(idx, v * scale);
  return out;
}

bool Tensor::is_diagonal(const MultiIndex& index) {
  return std::adjacent_find(index.begin(), index.end(),
                            std::not_equal_to<>()) == index.end();
}

void Tensor::check_index(const MultiIndex& index) const {
  if (static_cast<int>(index.size()) != order_) {
    throw std::out_of_range("index tuple length " +
                            std::to_string(index.size()) +
                            " does not match tensor order " +
                            std::to_string(order_));
  }
  for (int i : index) {
    if (i < 0 || i >= dim_) {
      throw std::out_of_range("index component " + std::to_string(i + 1) +
                              " outside [1, " + std::to_string(dim_) + "]");
    }
  }
}

void Tensor::check_same_shape(const Tensor& other) const {
  if (other.order_ != order_ || other.dim_ != dim_) {
    throw std::invalid_argument("tensor shape mismatch");
  }
}

void for_each_multi_index(int order, int dim,
                          const std::function<void(const MultiIndex&)>& visit,
                          double limit) {
  if (power_count(order, dim) > limit) {
    throw std::length_error("dense enumeration of " + std::to_string(dim) +
                            "^" + std::to_string(order) +
                            " tuples exceeds the configured limit");
  }
  MultiIndex idx(order, 0);
  while (true) {
    visit(idx);
    int pos = order - 1;
    while (pos >= 0 && ++idx[pos] == dim) {
      idx[pos] = 0;
      --pos;
    }
    if (pos < 0) return;
  }
}

Vector contract_to_vector(const Tensor& A, const Vector& x) {
  check_vector(A, x);
  Vector y = Vector::Zero(A.dim());
  for (const auto& [idx, v] : A.entries()) {
    double term = v;
    for (std::size_t p = 1; p < idx.size(); ++p) term *= x[idx[p]];
    y[idx[0]] += term;
  }
  return y;
}

Matrix contract_to_matrix(const Tensor& A, const Vector& x) {
  check_vector(A, x);
  Matrix M = Matrix::Zero(A.dim(), A.dim());
  for (const auto& [idx, v] : A.entries()) {
    double term = v;
    for (std::size_t p = 2; p < idx.size(); ++p) term *= x[idx[p]];
    M(idx[0], idx[1]) += term;
  }
  return M;
}

Tensor partial_symmetrize(const Tensor& A) {
  Tensor out(A.order(), A.dim());
  for (const auto& [idx, v] : A.entries()) {
    MultiIndex tail(idx.begin() + 1, idx.end());
    std::sort(tail.begin(), tail.end());
    // Each distinct arrangement of the tail stands for prod(k_j!) of the
    // (m-1)! permutations, so it receives v / (number of distinct ones).
    std::vector<MultiIndex> arrangements;
    do {
      arrangements.push_back(tail);
    } while (std::next_permutation(tail.begin(), tail.end()));
    const double share = v / static_cast<double>(arrangements.size());
    MultiIndex full(idx.size());
    full[0] = idx[0];
    for (const auto& arr : arrangements) {
      std::copy(arr.begin(), arr.end(), full.begin() + 1);
      out.add(full, share);
    }
  }
  return out;
}

Matrix jacobian(const Tensor& A, const Vector& x) {
  check_vector(A, x);
  const int n = A.dim();
  Matrix J = Matrix::Zero(n, n);
  for (const auto& [idx, v] : A.entries()) {
    const std::size_t m = idx.size();
    for (std::size_t p = 1; p < m; ++p) {
      double term = v;
      for (std::size_t q = 1; q < m; ++q) {
        if (q != p) term *= x[idx[q]];
      }
      J(idx[0], idx[p]) += term;
    }
  }
  return J;
}

namespace {

// B z^{m-1} >= r z^{[m-1]} for some z >= 0, z != 0 gives rho(B) >= r. Taking z
// as x with its negligible entries zeroed closes the bracket on reducible
// tensors, where the ratios at a strictly positive x stay apart.
double support_lower_bound(const Tensor& B, const Vector& x) {
  const double cut = 1e-6 * x.maxCoeff();
  Vector z = (x.array() > cut).select(x, 0.0);
  if (z.size() == 0 || (z.array() == x.array()).all()) return 0.0;
  const Vector y = contract_to_vector(B, z);
  double r = std::numeric_limits<double>::infinity();
  for (int i = 0; i < z.size(); ++i) {
    if (z[i] > 0.0) r = std::min(r, y[i] / std::pow(z[i], B.order() - 1));
  }
  return std::isfinite(r) ? r : 0.0;
}

}  // namespace

SpectralRadius spectral_radius_nonneg(const Tensor& B, double tol,
                                      int max_iter) {
  if (!B.is_nonnegative()) {
    throw std::invalid_argument(
        "spectral_radius_nonneg requires a nonnegative tensor");
  }
  SpectralRadius out;
  if (B.nnz() == 0) {
    out.converged = true;
    return out;
  }

  const int n = B.dim();
  const double exponent = 1.0 / static_cast<double>(B.order() - 1);
  const double shift_size = 1e-8 * B.max_abs();
  double shift = 0.0;
  double best_lo = 0.0;
  double best_hi = std::numeric_limits<double>::infinity();
  Vector x = Vector::Ones(n);

  for (int it = 1; it <= max_iter; ++it) {
    out.iterations = it;
    Vector powered = x.array().pow(B.order() - 1);
    Vector y = contract_to_vector(B, x) + shift * powered;
    Vector ratio = y.array() / powered.array();
    best_lo = std::max(best_lo, ratio.minCoeff() - shift);
    best_hi = std::min(best_hi, ratio.maxCoeff() - shift);
    best_lo = std::max(best_lo, support_lower_bound(B, x));
    if (best_hi - best_lo <= tol) {
      out.converged = true;
      break;
    }
    const bool lost_positivity = (y.array() <= 0.0).any();
    const bool stalled = it == max_iter / 10;
    if (shift == 0.0 && (lost_positivity || stalled)) {
      shift = shift_size;
      x = Vector::Ones(n);
      continue;
    }
    if (lost_positivity) break;
    x = y.array().pow(exponent);
    x /= x.maxCoeff();
  }

  best_hi = std::max(best_hi, best_lo);
  out.lo = std::max(0.0, best_lo - shift);
  out.hi = best_hi + shift;
  out.rho = 0.5 * (best_lo + best_hi);
  return out;
}

}  // namespace kstcp
