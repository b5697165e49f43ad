#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cvrpdiff/linalg.hpp"
#include "cvrpdiff/rng.hpp"

namespace cvrpdiff::nn {

struct Param {
  std::string name;
  Matrix value;
  bool trainable = true;
};

// Ordered, named parameter storage. Indices are stable handles.
class ParamSet {
 public:
  std::size_t add(std::string name, Matrix value, bool trainable = true);

  const Param& operator[](std::size_t i) const { return params_[i]; }
  Param& operator[](std::size_t i) { return params_[i]; }
  std::size_t size() const { return params_.size(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  std::optional<std::size_t> find(std::string_view name) const;
  std::size_t index(std::string_view name) const;  // throws ModelError
  std::size_t scalar_count() const;

  // Copies every value of `other` by name; throws ModelError on a missing
  // name or a shape mismatch.
  void assign_from(const ParamSet& other);
  bool bit_equal(const ParamSet& other) const;

 private:
  std::vector<Param> params_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

// Gradient accumulator parallel to a ParamSet.
struct GradBuffer {
  std::vector<Matrix> g;

  GradBuffer() = default;
  explicit GradBuffer(const ParamSet& params);
  void zero();
  void add(const GradBuffer& other);
  void scale(double s);
  double squared_norm() const;
};

// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) initialisation.
Matrix init_uniform(int rows, int cols, int fan_in, Rng& rng);

}  // namespace cvrpdiff::nn
