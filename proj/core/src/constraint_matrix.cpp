#include "cvrpdiff/constraint_matrix.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "cvrpdiff/errors.hpp"

namespace cvrpdiff {

int ConstraintMatrix::count_ones() const { return static_cast<int>(std::count(bits_.begin(), bits_.end(), 1)); }

Matrix ConstraintMatrix::as_matrix() const {
  Matrix m(n_, n_);
  for (int r = 0; r < n_; ++r)
    for (int c = 0; c < n_; ++c) m(r, c) = (*this)(r, c) ? 1.0 : 0.0;
  return m;
}

std::string ConstraintMatrix::to_text() const {
  std::string out;
  out.reserve(static_cast<std::size_t>(n_) * (n_ + 1));
  for (int r = 0; r < n_; ++r) {
    for (int c = 0; c < n_; ++c) out += (*this)(r, c) ? '1' : '0';
    out += '\n';
  }
  return out;
}

ConstraintMatrix ConstraintMatrix::from_text(std::string_view text) {
  std::vector<std::string> rows;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    std::erase_if(line, [](char ch) { return ch == ' ' || ch == '\r' || ch == '\t'; });
    if (!line.empty()) rows.push_back(line);
  }
  const int n = static_cast<int>(rows.size());
  ConstraintMatrix m(n);
  for (int r = 0; r < n; ++r) {
    if (static_cast<int>(rows[r].size()) != n)
      throw ParseError("constraint matrix row has " + std::to_string(rows[r].size()) + " entries, expected " +
                           std::to_string(n),
                       static_cast<std::size_t>(r) + 1);
    for (int c = 0; c < n; ++c) {
      const char ch = rows[r][c];
      if (ch != '0' && ch != '1') throw ParseError("constraint matrix entries must be 0 or 1", r + 1);
      m.set(r, c, ch == '1');
    }
  }
  return m;
}

ConstraintMatrix from_solution(const CvrpInstance& instance, const CvrpSolution& solution) {
  const auto report = check_feasible(instance, solution);
  if (!report.feasible()) throw InputError("constraint matrix needs a feasible solution: " + report.summary());
  ConstraintMatrix m(instance.size());
  for (const auto& route : solution.routes)
    for (int a : route)
      for (int b : route)
        if (a != b) m.set(a - 1, b - 1, true);
  return m;
}

ConstraintMatrix threshold_probabilities(const EdgeProbabilities& probs, double threshold) {
  if (probs.rows() != probs.cols()) throw InputError("edge probabilities must be square");
  const int n = static_cast<int>(probs.rows());
  ConstraintMatrix m(n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c)
      if (r != c) m.set(r, c, 0.5 * (probs(r, c) + probs(c, r)) > threshold);
  return m;
}

ConstraintMatrix transitive_closure(const ConstraintMatrix& m) {
  const int n = m.size();
  std::vector<int> parent(static_cast<std::size_t>(n));
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c)
      if (r != c && (m(r, c) || m(c, r))) parent[find(r)] = find(c);
  ConstraintMatrix out(n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c)
      if (r != c && find(r) == find(c)) out.set(r, c, true);
  return out;
}

std::string MatrixViolation::describe() const {
  switch (kind) {
    case Kind::asymmetric: return "asymmetric: (" + std::to_string(i) + "," + std::to_string(j) + ")";
    case Kind::diagonal: return "diagonal: " + std::to_string(i);
    case Kind::transitivity:
      return "transitivity: (" + std::to_string(i) + "," + std::to_string(j) + "," + std::to_string(k) + ")";
    case Kind::capacity: return "capacity: row " + std::to_string(i) + " over by " + std::to_string(overload);
  }
  return "unknown";
}

MatrixReport validate(const ConstraintMatrix& m, const CvrpInstance& instance, bool check_capacity,
                      std::size_t max_witnesses) {
  const int n = m.size();
  if (n != instance.size())
    throw InputError("constraint matrix is " + std::to_string(n) + "x" + std::to_string(n) + " but instance has " +
                     std::to_string(instance.size()) + " customers");
  MatrixReport report;
  using K = MatrixViolation::Kind;
  for (int i = 0; i < n; ++i) {
    if (m(i, i)) report.violations.push_back({K::diagonal, i, i, -1, 0});
    for (int j = i + 1; j < n; ++j)
      if (m(i, j) != m(j, i)) report.violations.push_back({K::asymmetric, i, j, -1, 0});
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j || !m(i, j)) continue;
      for (int k = 0; k < n; ++k) {
        if (k == i || k == j || !m(j, k) || m(i, k)) continue;
        if (report.transitivity_violations++ < max_witnesses) report.violations.push_back({K::transitivity, i, j, k, 0});
      }
    }
  if (check_capacity) {
    for (int i = 0; i < n; ++i) {
      int load = instance.demand(i + 1);
      for (int j = 0; j < n; ++j)
        if (j != i && m(i, j)) load += instance.demand(j + 1);
      if (load > instance.capacity) report.violations.push_back({K::capacity, i, -1, -1, load - instance.capacity});
    }
  }
  return report;
}

std::optional<double> auc_score(const EdgeProbabilities& pred, const ConstraintMatrix& truth) {
  const int n = truth.size();
  if (pred.rows() != n || pred.cols() != n) throw InputError("auc_score: dimension mismatch");
  struct Entry {
    double score;
    bool positive;
  };
  std::vector<Entry> entries;
  entries.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) entries.push_back({pred(i, j), truth(i, j)});
  const auto positives = static_cast<double>(std::count_if(entries.begin(), entries.end(), [](auto& e) { return e.positive; }));
  const double negatives = static_cast<double>(entries.size()) - positives;
  if (positives == 0.0 || negatives == 0.0) return std::nullopt;
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) { return a.score < b.score; });
  // Mann-Whitney U with midranks for tied scores.
  double rank_sum = 0.0;
  std::size_t i = 0;
  while (i < entries.size()) {
    std::size_t j = i;
    while (j < entries.size() && entries[j].score == entries[i].score) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k)
      if (entries[k].positive) rank_sum += midrank;
    i = j;
  }
  return (rank_sum - positives * (positives + 1) / 2.0) / (positives * negatives);
}

double agreement(const ConstraintMatrix& a, const ConstraintMatrix& b) {
  if (a.size() != b.size()) throw InputError("agreement: dimension mismatch");
  const int n = a.size();
  if (n < 2) return 1.0;
  int same = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j && a(i, j) == b(i, j)) ++same;
  return same / static_cast<double>(n * (n - 1));
}

}  // namespace cvrpdiff
