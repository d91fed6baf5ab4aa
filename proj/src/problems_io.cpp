#include "kstcp/problems_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <random>
#include <set>
#include <sstream>

namespace kstcp {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

double parse_real(std::string_view tok, int line, const char* what) {
  double v = 0.0;
  const char* begin = tok.data();
  const char* end = tok.data() + tok.size();
  if (!tok.empty() && *begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) {
    throw ParseError(line, std::string("invalid ") + what + " '" + std::string(tok) + "'");
  }
  return v;
}

int parse_int(std::string_view tok, int line, const char* what) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) {
    throw ParseError(line, std::string("invalid ") + what + " '" + std::string(tok) + "'");
  }
  return v;
}

int parse_header_field(std::string_view tok, std::string_view key, int line) {
  if (tok.substr(0, key.size()) != key) {
    throw ParseError(line, "expected '" + std::string(key) + "<int>' in header");
  }
  return parse_int(tok.substr(key.size()), line, "header value");
}

Tensor tensor_from(int order, int dim,
                   std::initializer_list<std::pair<std::initializer_list<int>, double>> ones_based) {
  Tensor t(order, dim);
  for (const auto& [idx, v] : ones_based) {
    MultiIndex zero_based;
    for (int i : idx) zero_based.push_back(i - 1);
    t.set(zero_based, v);
  }
  return t;
}

Tensor diagonal_ones(int order, int dim) { return Tensor::identity(order, dim); }

Vector vec(std::initializer_list<double> values) {
  Vector v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v[i++] = x;
  return v;
}

Tensor example_2_3() {
  return tensor_from(4, 2, {{{1, 1, 1, 1}, 1.0},
                            {{2, 2, 2, 2}, 1.0},
                            {{1, 2, 1, 2}, 1.0},
                            {{1, 2, 2, 1}, -1.0},
                            {{2, 1, 1, 2}, -0.5}});
}

// Candidate with diagonal 1 + sum |off-diagonal| per row.
TCPProblem draw_instance(int order, int dim, double density, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Tensor A(order, dim);
  const double tails = std::pow(static_cast<double>(dim), order - 1);
  std::vector<double> row_sum(dim, 0.0);
  auto draw_value = [&] { return -std::max(0.001, std::round(unit(rng) * 1000.0) / 1000.0); };

  for (int i = 0; i < dim; ++i) {
    auto consider = [&](const MultiIndex& tail) {
      MultiIndex idx{i};
      idx.insert(idx.end(), tail.begin(), tail.end());
      if (Tensor::is_diagonal(idx)) return;
      const double v = draw_value();
      A.set(idx, v);
      row_sum[i] += -v;
    };
    if (tails <= 1e5) {
      for_each_multi_index(order - 1, dim, [&](const MultiIndex& tail) {
        if (unit(rng) < density) consider(tail);
      }, 1e5);
    } else {
      const int count = static_cast<int>(std::min(64.0, std::round(density * tails)));
      std::uniform_int_distribution<int> pick(0, dim - 1);
      for (int c = 0; c < count; ++c) {
        MultiIndex tail(order - 1);
        for (int& t : tail) t = pick(rng);
        consider(tail);
      }
    }
  }
  for (int i = 0; i < dim; ++i) A.set(MultiIndex(order, i), 1.0 + row_sum[i]);

  Vector q = Vector::Zero(dim);
  for (int i = 0; i < dim; ++i) {
    if (unit(rng) < 0.5) q[i] = std::max(0.001, std::round(unit(rng) * 1000.0) / 1000.0);
  }
  if ((q.array() == 0.0).all()) q[std::uniform_int_distribution<int>(0, dim - 1)(rng)] = 1.0;
  return TCPProblem(std::move(A), std::move(q));
}

}  // namespace

ParseError::ParseError(int line, const std::string& message)
    : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + message : message),
      line_(line) {}

TCPProblem parse_problem(std::string_view text) {
  int order = 0, dim = 0;
  bool have_header = false, have_q = false;
  std::string name, notes;
  std::vector<std::pair<MultiIndex, double>> entries;
  std::set<MultiIndex> seen;
  Vector q;

  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view raw = text.substr(pos, nl == std::string_view::npos ? text.npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (!raw.empty() && raw.back() == '\r') raw.remove_suffix(1);
    std::string_view line = trim(raw);
    if (line.empty()) continue;
    if (line.front() == '#') {
      std::string_view body = trim(line.substr(1));
      if (body.substr(0, 5) == "name:") {
        name = std::string(trim(body.substr(5)));
      } else if (body.substr(0, 5) == "note:") {
        if (!notes.empty()) notes += '\n';
        notes += std::string(trim(body.substr(5)));
      }
      continue;
    }
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = trim(line.substr(0, hash));
    }
    const auto tok = split_ws(line);
    if (!have_header) {
      if (tok.size() != 4 || tok[0] != "tcp" || tok[1] != "v1") {
        throw ParseError(line_no, "expected header 'tcp v1 order=<m> dim=<n>'");
      }
      order = parse_header_field(tok[2], "order=", line_no);
      dim = parse_header_field(tok[3], "dim=", line_no);
      if (order < 2) throw ParseError(line_no, "order must be >= 2");
      if (dim < 1) throw ParseError(line_no, "dim must be >= 1");
      have_header = true;
      continue;
    }
    if (tok[0] == "a") {
      if (static_cast<int>(tok.size()) != order + 2) {
        throw ParseError(line_no, "entry line needs " + std::to_string(order) +
                                      " indices and a value");
      }
      MultiIndex idx(order);
      for (int p = 0; p < order; ++p) {
        const int i = parse_int(tok[1 + p], line_no, "index");
        if (i < 1 || i > dim) {
          throw ParseError(line_no, "index " + std::to_string(i) + " outside [1, " +
                                        std::to_string(dim) + "]");
        }
        idx[p] = i - 1;
      }
      if (!seen.insert(idx).second) throw ParseError(line_no, "duplicate index tuple");
      entries.emplace_back(std::move(idx), parse_real(tok.back(), line_no, "value"));
    } else if (tok[0] == "q") {
      if (have_q) throw ParseError(line_no, "duplicate q line");
      if (static_cast<int>(tok.size()) != dim + 1) {
        throw ParseError(line_no, "q line needs " + std::to_string(dim) + " values");
      }
      q.resize(dim);
      for (int i = 0; i < dim; ++i) {
        q[i] = parse_real(tok[1 + i], line_no, "q value");
        if (q[i] < 0.0) {
          throw ParseError(line_no,
                           "q component " + std::to_string(i + 1) + " is negative (" +
                               std::string(tok[1 + i]) +
                               "); q must be nonnegative, otherwise x = 0 is trivially "
                               "the sparsest solution");
        }
      }
      have_q = true;
    } else {
      throw ParseError(line_no, "unknown record '" + std::string(tok[0]) + "'");
    }
  }
  if (!have_header) throw ParseError(0, "missing 'tcp v1' header");
  if (!have_q) throw ParseError(0, "missing q line");

  Tensor A(order, dim);
  for (const auto& [idx, v] : entries) A.set(idx, v);
  TCPProblem p(std::move(A), std::move(q), std::move(name));
  p.notes = std::move(notes);
  return p;
}

std::string format_decimal(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::string serialize_problem(const TCPProblem& p) {
  std::ostringstream out;
  if (!p.name.empty()) out << "# name: " << p.name << '\n';
  if (!p.notes.empty()) {
    std::istringstream lines(p.notes);
    for (std::string l; std::getline(lines, l);) out << "# note: " << l << '\n';
  }
  out << "tcp v1 order=" << p.A.order() << " dim=" << p.A.dim() << '\n';
  for (const auto& [idx, v] : p.A.entries()) {
    out << 'a';
    for (int i : idx) out << ' ' << i + 1;
    out << ' ' << format_decimal(v) << '\n';
  }
  out << 'q';
  for (int i = 0; i < p.q.size(); ++i) out << ' ' << format_decimal(p.q[i]);
  out << '\n';
  return out.str();
}

const std::vector<std::string>& builtin_names() {
  static const std::vector<std::string> names{"ex2_1", "ex2_2", "ex2_3", "ex3_1", "ex5_1",
                                              "ex5_2", "ex5_3", "ex5_4", "ex5_5"};
  return names;
}

TCPProblem builtin(std::string_view name) {
  auto make = [&](Tensor A, Vector q, std::string notes) {
    TCPProblem p(std::move(A), std::move(q), std::string(name));
    p.notes = std::move(notes);
    return p;
  };
  if (name == "ex2_1") {
    return make(tensor_from(3, 2, {{{1, 1, 1}, 1.0}, {{2, 1, 1}, 1.0},
                                   {{1, 2, 2}, -1.0}, {{2, 2, 2}, 1.0}}),
                Vector::Zero(2), "KS candidate that is not a Z-tensor; tensor only");
  }
  if (name == "ex2_2") {
    return make(tensor_from(3, 2, {{{1, 1, 1}, 1.0}, {{1, 2, 1}, -1.0}, {{2, 2, 1}, -1.0},
                                   {{1, 1, 2}, -2.0}, {{2, 2, 2}, -1.0}}),
                Vector::Zero(2), "Z-tensor that is not a P-tensor; tensor only");
  }
  if (name == "ex2_3") {
    return make(example_2_3(), Vector::Zero(2),
                "KS-tensor satisfying the row-sum condition, not a Z-tensor; tensor only");
  }
  if (name == "ex3_1") {
    return make(tensor_from(4, 2, {{{1, 1, 1, 1}, 1.0}, {{1, 1, 1, 2}, -2.0},
                                   {{1, 1, 2, 2}, 1.0}, {{2, 2, 2, 2}, 1.0}}),
                vec({0.0, 1.0}), "solutions (0,1) and (1,1)");
  }
  if (name == "ex5_1") {
    return make(tensor_from(4, 2, {{{1, 1, 1, 1}, 1.0}, {{2, 2, 2, 2}, 8.0},
                                   {{1, 1, 1, 2}, -2.0}}),
                vec({0.0, 1.0}), "sparse solution (0, 0.5)");
  }
  if (name == "ex5_2") {
    return make(example_2_3(), vec({0.0, 1.0}), "sparse solution (0, 1)");
  }
  if (name == "ex5_3") {
    Tensor A = diagonal_ones(6, 3);
    A.set({0, 1, 2, 1, 0, 0}, -1.0);
    A.set({1, 2, 0, 0, 1, 0}, -2.0);
    return make(std::move(A), vec({0.0, 1.0, 1.0}), "sparse solution (0, 1, 1)");
  }
  if (name == "ex5_4") {
    return make(tensor_from(4, 4, {{{1, 1, 1, 1}, 2.0}, {{2, 2, 2, 2}, 2.0},
                                   {{3, 3, 3, 3}, 3.0}, {{4, 4, 4, 4}, 3.0},
                                   {{1, 4, 3, 2}, -2.0}, {{3, 1, 4, 3}, -5.0}}),
                vec({0.0, 1.0, 1.0, 0.0}), "sparse solution (0, 2^(-1/3), 3^(-1/3), 0)");
  }
  if (name == "ex5_5") {
    Tensor A = diagonal_ones(10, 9);
    A.set({1, 5, 6, 6, 7, 3, 1, 4, 4, 5}, -3.0);
    Vector q = Vector::Zero(9);
    q[8] = 1.0;
    return make(std::move(A), std::move(q), "sparse solution e9");
  }
  throw std::invalid_argument("unknown built-in problem '" + std::string(name) + "'");
}

Vector builtin_reference_solution(std::string_view name) {
  if (name == "ex3_1") return vec({0.0, 1.0});
  if (name == "ex5_1") return vec({0.0, 0.5});
  if (name == "ex5_2") return vec({0.0, 1.0});
  if (name == "ex5_3") return vec({0.0, 1.0, 1.0});
  if (name == "ex5_4") return vec({0.0, std::cbrt(0.5), std::cbrt(1.0 / 3.0), 0.0});
  if (name == "ex5_5") {
    Vector x = Vector::Zero(9);
    x[8] = 1.0;
    return x;
  }
  throw std::invalid_argument("no reference solution for '" + std::string(name) + "'");
}

TCPProblem generate_ks_instance(int order, int dim, double density, std::uint64_t seed) {
  if (order < 2 || dim < 1) throw std::invalid_argument("generator needs order >= 2, dim >= 1");
  if (!(density >= 0.0 && density <= 1.0)) {
    throw std::invalid_argument("density must lie in [0, 1]");
  }
  constexpr int kSeedsPerDensity = 10;
  constexpr int kDensityLevels = 4;
  for (int level = 0; level < kDensityLevels; ++level) {
    for (int attempt = 0; attempt < kSeedsPerDensity; ++attempt) {
      std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                        static_cast<std::uint32_t>(level), static_cast<std::uint32_t>(attempt)};
      std::mt19937_64 rng(seq);
      TCPProblem p = draw_instance(order, dim, density, rng);
      const Certificate ks = is_ks_tensor(p.A);
      const Certificate cond = satisfies_condition2(p.A);
      const Certificate w = is_nonsingular_m_tensor(ks_split(p.A).W);
      if (is_positive(ks.verdict) && cond.verdict == Verdict::certified_true &&
          w.verdict == Verdict::certified_true) {
        p.tags = ProblemTags{ks.verdict, cond.verdict, w.verdict};
        p.name = "ks_m" + std::to_string(order) + "_n" + std::to_string(dim) + "_seed" +
                 std::to_string(seed);
        return p;
      }
    }
    density *= 0.5;
  }
  throw std::runtime_error("generator exhausted its retries without a certified KS instance");
}

}  // namespace kstcp
