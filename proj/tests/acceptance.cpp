// Acceptance checks 1-14. Prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails.

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "kstcp/classify.hpp"
#include "kstcp/problems_io.hpp"
#include "kstcp/qp_subproblem.hpp"
#include "kstcp/sqp_solver.hpp"
#include "oracles.hpp"

using namespace kstcp;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

struct Check {
  int id;
  const char* title;
  double time_limit;  // seconds; 0 = none
  std::function<Outcome()> body;
};

double inf_dist(const Vector& a, const Vector& b) { return (a - b).lpNorm<Eigen::Infinity>(); }

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

double median(std::vector<int> v) {
  if (v.empty()) return NAN;
  std::sort(v.begin(), v.end());
  const std::size_t k = v.size();
  return k % 2 ? v[k / 2] : 0.5 * (v[k / 2 - 1] + v[k / 2]);
}

/// Shared body of the example-reproduction criteria.
struct Reproduction {
  const char* name;
  int starts;
  double tol;
  double min_rate;
  bool every_success_near;  // every converged run must sit at the reference
  int max_median_iter;      // 0 = no bound
  int max_iter_bound;       // 0 = no bound
};

Outcome reproduce(const Reproduction& r0) {
  const TCPProblem p = builtin(r0.name);
  const Vector ref = builtin_reference_solution(r0.name);
  const SQPConfig cfg;
  const MultistartResult ms = multistart_sparse(p, r0.starts, kDefaultSeed, cfg);
  Outcome o;
  std::vector<int> iters;
  int near = 0, far = 0;
  for (const SolveReport& r : ms.runs) {
    if (!is_success(r, cfg)) continue;
    iters.push_back(r.iterations);
    (inf_dist(r.x_star, ref) <= r0.tol ? near : far)++;
  }
  std::ostringstream d;
  d << "success " << ms.successes << "/" << r0.starts;
  if (ms.best_index >= 0) d << ", best err " << fmt(inf_dist(ms.best.x_star, ref));
  d << ", converged runs at reference " << near << "/" << near + far;
  if (!iters.empty()) {
    d << ", iterations median " << median(iters) << " max "
      << *std::max_element(iters.begin(), iters.end());
  }
  o.pass = ms.best_index >= 0 && inf_dist(ms.best.x_star, ref) <= r0.tol &&
           ms.success_rate >= r0.min_rate;
  if (r0.every_success_near && far > 0) o.pass = false;
  if (r0.max_median_iter && !(median(iters) <= r0.max_median_iter)) o.pass = false;
  if (r0.max_iter_bound && !iters.empty() &&
      *std::max_element(iters.begin(), iters.end()) > r0.max_iter_bound) {
    o.pass = false;
  }
  o.detail = d.str();
  return o;
}

Outcome classification_fixtures() {
  Outcome o;
  std::ostringstream d;
  const auto expect = [&](const char* what, Verdict got, Verdict want) {
    if (got != want) {
      o.pass = false;
      d << what << " = " << to_string(got) << " (want " << to_string(want) << "); ";
    }
  };
  const Tensor e21 = builtin("ex2_1").A, e22 = builtin("ex2_2").A, e23 = builtin("ex2_3").A;
  expect("ex2_1 ks", is_ks_tensor(e21).verdict, Verdict::supported);
  expect("ex2_1 z", is_z_tensor(e21).verdict, Verdict::certified_false);
  expect("ex2_2 z", is_z_tensor(e22).verdict, Verdict::certified_true);
  expect("ex2_2 p", is_p_tensor_sampled(e22).verdict, Verdict::refuted);
  expect("ex2_2 ks", is_ks_tensor(e22).verdict, Verdict::refuted);
  expect("ex2_3 ks", is_ks_tensor(e23).verdict, Verdict::supported);
  expect("ex2_3 condition2", satisfies_condition2(e23).verdict, Verdict::certified_true);
  Vector w(2);
  w << 1.4, 1.3;
  if (!verify_m_tensor_witness(ks_split(e23).W, w)) {
    o.pass = false;
    d << "witness (1.4, 1.3) rejected for W; ";
  }
  if (o.pass) d << "all verdicts match";
  const Certificate p21 = is_p_tensor_sampled(e21);
  if (const auto* x = std::get_if<Vector>(&p21.evidence)) {
    d << "ex2_1 P-test witness x = (" << (*x)[0] << ", " << (*x)[1]
      << "), margin " << fmt(p_tensor_margin(e21, *x));
  }
  o.detail = d.str();
  return o;
}

Outcome sparsity_selection() {
  const MultistartResult ms = multistart_sparse(builtin("ex3_1"), 20, kDefaultSeed);
  Vector ref(2);
  ref << 0, 1;
  Outcome o;
  o.pass = ms.best_index >= 0 && ms.best.l0 == 1 && inf_dist(ms.best.x_star, ref) <= 1e-4;
  o.detail = "best l0 " + std::to_string(ms.best.l0) + ", err " +
             fmt(inf_dist(ms.best.x_star, ref));
  return o;
}

Outcome jacobian_property() {
  std::mt19937_64 rng(20261015);
  std::uniform_int_distribution<int> order(3, 4), dim(2, 5);
  double worst = 0.0;
  for (int t = 0; t < 200; ++t) {
    const int m = order(rng), n = dim(rng);
    const Tensor A = oracle::random_tensor(m, n, 4 * n, rng);
    const Vector x = oracle::random_vector(n, -1, 1, rng);
    const auto F = [&](const Vector& y) { return contract_to_vector(A, y); };
    worst = std::max(worst, oracle::max_relative_error(jacobian(A, x),
                                                       oracle::central_difference(F, x)));
  }
  return {worst <= 1e-6, "max relative error " + fmt(worst)};
}

Outcome qp_oracle() {
  std::mt19937_64 rng(99);
  double worst = 0.0;
  int bad = 0;
  for (int t = 0; t < 100; ++t) {
    const int n = 1 + t % 4;
    const oracle::RandomQP rq = oracle::random_qp(n, t % (n + 1), rng);
    const auto ref = oracle::active_set_enumeration(rq.qp.B, rq.qp.c, rq.R, rq.r, -rq.qp.g);
    const QPResult r = solve_qp(rq.qp, default_start(n));
    if (!ref.found || r.status != QPStatus::converged) {
      ++bad;
      continue;
    }
    worst = std::max(worst, inf_dist(r.d, ref.d));
  }
  return {bad == 0 && worst <= 1e-8,
          "max |d - d_ref| " + fmt(worst) + ", unconverged " + std::to_string(bad)};
}

Outcome z_function_property() {
  int refuted = 0, instances = 0;
  if (z_function_check(builtin("ex2_3").A, 1000, kDefaultSeed).verdict == Verdict::refuted) ++refuted;
  for (std::uint64_t seed = 1; instances < 20; ++seed) {
    const TCPProblem p = generate_ks_instance(3 + seed % 2, 2 + seed % 4, 0.3, seed);
    if (satisfies_condition2(p.A).verdict != Verdict::certified_true) continue;
    ++instances;
    if (z_function_check(p.A, 1000, seed).verdict == Verdict::refuted) ++refuted;
  }
  return {refuted == 0, "ex2_3 + " + std::to_string(instances) + " generated instances, " +
                            std::to_string(refuted) + " refuted"};
}

Outcome two_system_equivalence() {
  const SQPConfig cfg;
  const double tol = 10 * cfg.eps2;
  int kkt = 0, bad = 0;
  for (const char* name : {"ex3_1", "ex5_1", "ex5_2", "ex5_3", "ex5_4", "ex5_5"}) {
    const MultistartResult ms = multistart_sparse(builtin(name), 10, kDefaultSeed, cfg);
    for (const SolveReport& r : ms.runs) {
      if (r.status != SolveStatus::kkt) continue;
      ++kkt;
      const TCPResiduals& res = r.residuals;
      const bool complementarity =
          res.min_x >= -tol && res.min_w >= -tol && res.complementarity <= tol;
      const bool equation = res.min_x >= -tol && res.equation_inf <= tol;
      if (!complementarity || !equation) ++bad;
    }
  }
  return {kkt > 0 && bad == 0,
          std::to_string(kkt) + " kkt reports, " + std::to_string(bad) + " violating"};
}

Outcome spectral_radius() {
  double worst = 0.0;
  for (int n = 2; n <= 4; ++n) {
    worst = std::max(worst, std::abs(spectral_radius_nonneg(Tensor::ones(3, n)).rho - n * n));
  }
  const double zero = spectral_radius_nonneg(Tensor(3, 3)).rho;
  return {worst <= 1e-8 && zero == 0.0, "max |rho - n^2| " + fmt(worst) + ", zero tensor " + fmt(zero)};
}

Outcome bfgs_spd() {
  std::mt19937_64 rng(31);
  double worst = INFINITY;
  for (int t = 0; t < 1000; ++t) {
    const int n = 1 + t % 8;
    const Matrix B = oracle::random_spd(n, rng);
    const Matrix Bn = damped_bfgs(B, oracle::random_vector(n, -1, 1, rng),
                                  oracle::random_vector(n, -1, 1, rng));
    worst = std::min(worst, Eigen::SelfAdjointEigenSolver<Matrix>(Bn, Eigen::EigenvaluesOnly)
                                .eigenvalues()
                                .minCoeff());
  }
  return {worst > 0.0, "smallest eigenvalue " + fmt(worst)};
}

Outcome io_round_trip() {
  int bad = 0, total = 0;
  for (const std::string& name : builtin_names()) {
    ++total;
    const TCPProblem p = builtin(name);
    if (!(parse_problem(serialize_problem(p)) == p)) ++bad;
  }
  for (int seed = 0; seed < 50; ++seed) {
    ++total;
    const TCPProblem p = generate_ks_instance(3 + seed % 2, 2 + seed % 4, 0.5, seed);
    if (!(parse_problem(serialize_problem(p)) == p)) ++bad;
  }
  return {bad == 0, std::to_string(total - bad) + "/" + std::to_string(total) + " identical"};
}

}  // namespace

int main() {
  const std::vector<Check> checks = {
      {1, "ex5_1 reproduction", 5,
       [] { return reproduce({"ex5_1", 20, 1e-4, 0.8, true, 60, 0}); }},
      {2, "ex5_2 reproduction", 5, [] { return reproduce({"ex5_2", 20, 1e-4, 0.8, false, 0, 0}); }},
      {3, "ex5_3 reproduction", 10, [] { return reproduce({"ex5_3", 20, 1e-4, 0.8, false, 0, 0}); }},
      {4, "ex5_4 reproduction", 30, [] { return reproduce({"ex5_4", 50, 1e-3, 0.4, true, 0, 0}); }},
      {5, "ex5_5 reproduction", 120,
       [] { return reproduce({"ex5_5", 20, 1e-4, 0.5, false, 0, 400}); }},
      {6, "classification fixtures", 1, classification_fixtures},
      {7, "sparsity selection", 0, sparsity_selection},
      {8, "jacobian vs finite differences", 0, jacobian_property},
      {9, "QP vs active-set enumeration", 0, qp_oracle},
      {10, "Z-function property", 0, z_function_property},
      {11, "two-system equivalence", 0, two_system_equivalence},
      {12, "spectral radius", 0, spectral_radius},
      {13, "damped BFGS SPD preservation", 0, bfgs_spd},
      {14, "I/O round-trip", 0, io_round_trip},
  };
  int failures = 0;
  for (const Check& c : checks) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.body();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.time_limit > 0 && secs >= c.time_limit) {
      o.pass = false;
      o.detail += "; over time limit " + fmt(c.time_limit) + " s";
    }
    failures += !o.pass;
    std::printf("%s criterion %2d  %-32s %7.2fs  %s\n", o.pass ? "PASS" : "FAIL", c.id, c.title,
                secs, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(checks.size()) - failures, checks.size());
  return failures == 0 ? 0 : 1;
}
