#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "kstcp/sqp_solver.hpp"

namespace kstcp {

/**
 * Error raised by parse_problem. `line()` is 1-based (0 when the error is not
 * tied to a line, e.g. a missing `q` line).
 */
class ParseError : public std::runtime_error {
 public:
  ParseError(int line, const std::string& message);
  int line() const { return line_; }

 private:
  int line_;
};

/**
 * Reads the line-oriented `tcp v1` format:
 *
 *     # name: ex5_1
 *     tcp v1 order=4 dim=2
 *     a 1 1 1 1 1
 *     a 1 1 1 2 -2
 *     a 2 2 2 2 8
 *     q 0 1
 *
 * Indices are 1-based. `#` starts a comment; a `# name:` / `# note:` comment
 * fills the problem metadata. CRLF line endings are accepted.
 */
TCPProblem parse_problem(std::string_view text);

/// Canonical text: entries in lexicographic order, shortest round-trip decimals.
std::string serialize_problem(const TCPProblem& p);

/// Shortest decimal string that parses back to exactly `v`.
std::string format_decimal(double v);

/// Names of the built-in examples, in display order.
const std::vector<std::string>& builtin_names();

/// The built-in examples. Tensor-only examples (ex2_*) carry q = 0.
/// Throws std::invalid_argument for an unknown name.
TCPProblem builtin(std::string_view name);

/// Known sparse solution of the ex5_* and ex3_1 problems.
Vector builtin_reference_solution(std::string_view name);

/**
 * Random diagonally dominant Z-tensor instance (hence a nonsingular M-tensor
 * with witness e, and a KS-tensor satisfying the row-sum condition).
 * Off-diagonal entries are drawn at `density`; q is nonnegative and nonzero.
 * Each candidate is classified before it is returned; after 10 rejected
 * seeds the density is halved. Throws std::runtime_error when exhausted.
 */
TCPProblem generate_ks_instance(int order, int dim, double density, std::uint64_t seed);

}  // namespace kstcp
