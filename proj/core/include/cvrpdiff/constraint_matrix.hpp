#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cvrpdiff/instance.hpp"
#include "cvrpdiff/linalg.hpp"

namespace cvrpdiff {

// Binary same-route indicator over customers. Position r refers to customer
// r + 1; the depot has no row.
class ConstraintMatrix {
 public:
  ConstraintMatrix() = default;
  explicit ConstraintMatrix(int n) : n_(n), bits_(static_cast<std::size_t>(n) * n, 0) {}

  int size() const { return n_; }
  bool operator()(int r, int c) const { return bits_[static_cast<std::size_t>(r) * n_ + c] != 0; }
  void set(int r, int c, bool v) { bits_[static_cast<std::size_t>(r) * n_ + c] = v ? 1 : 0; }
  // Same-route test by customer index (1..N).
  bool linked(int ci, int cj) const { return (*this)(ci - 1, cj - 1); }
  int count_ones() const;

  Matrix as_matrix() const;
  // Row-major 0/1 text, one row per line.
  std::string to_text() const;
  static ConstraintMatrix from_text(std::string_view text);

  friend bool operator==(const ConstraintMatrix&, const ConstraintMatrix&) = default;

 private:
  int n_ = 0;
  std::vector<std::uint8_t> bits_;
};

// Per-entry probability that the entry is 1. Symmetric with zero diagonal
// when produced by the denoiser.
using EdgeProbabilities = Matrix;

// m(i,j) = 1 iff customers i != j share a route. Throws InputError for an
// infeasible solution.
ConstraintMatrix from_solution(const CvrpInstance& instance, const CvrpSolution& solution);

// Averages with the transpose, then sets entries with probability > threshold.
ConstraintMatrix threshold_probabilities(const EdgeProbabilities& probs, double threshold = 0.5);

ConstraintMatrix transitive_closure(const ConstraintMatrix& m);

struct MatrixViolation {
  enum class Kind { asymmetric, transitivity, diagonal, capacity };
  Kind kind;
  int i = -1, j = -1, k = -1;  // witnesses as matrix positions
  int overload = 0;
  std::string describe() const;
};

struct MatrixReport {
  std::vector<MatrixViolation> violations;
  std::size_t transitivity_violations = 0;  // total count; witnesses are capped
  bool valid() const { return violations.empty(); }
};

// Checks symmetry, zero diagonal, transitivity and (optionally) capacity
// consistency. At most `max_witnesses` transitivity triples are listed.
MatrixReport validate(const ConstraintMatrix& m, const CvrpInstance& instance, bool check_capacity,
                      std::size_t max_witnesses = 64);

// ROC-AUC over strictly upper-triangular entries with midrank ties. Empty
// when the truth has only one class.
std::optional<double> auc_score(const EdgeProbabilities& pred, const ConstraintMatrix& truth);

// Fraction of off-diagonal entries on which two matrices agree.
double agreement(const ConstraintMatrix& a, const ConstraintMatrix& b);

}  // namespace cvrpdiff
