#include "cvrpdiff/nn/params.hpp"

#include <cmath>
#include <cstring>
#include <random>

#include "cvrpdiff/errors.hpp"

namespace cvrpdiff::nn {

std::size_t ParamSet::add(std::string name, Matrix value, bool trainable) {
  if (index_.count(name)) throw ModelError("duplicate parameter name: " + name);
  index_.emplace(name, params_.size());
  params_.push_back(Param{std::move(name), std::move(value), trainable});
  return params_.size() - 1;
}

std::optional<std::size_t> ParamSet::find(std::string_view name) const {
  auto it = index_.find(name);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t ParamSet::index(std::string_view name) const {
  auto i = find(name);
  if (!i) throw ModelError("unknown parameter: " + std::string(name));
  return *i;
}

std::size_t ParamSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += static_cast<std::size_t>(p.value.size());
  return n;
}

void ParamSet::assign_from(const ParamSet& other) {
  for (auto& p : params_) {
    auto i = other.find(p.name);
    if (!i) throw ModelError("missing parameter: " + p.name);
    const auto& src = other[*i].value;
    if (src.rows() != p.value.rows() || src.cols() != p.value.cols())
      throw ModelError("shape mismatch for parameter: " + p.name);
    p.value = src;
  }
}

bool ParamSet::bit_equal(const ParamSet& other) const {
  if (size() != other.size()) return false;
  for (std::size_t i = 0; i < size(); ++i) {
    const auto& a = params_[i];
    const auto& b = other[i];
    if (a.name != b.name || a.value.rows() != b.value.rows() || a.value.cols() != b.value.cols()) return false;
    if (std::memcmp(a.value.data(), b.value.data(), sizeof(double) * static_cast<std::size_t>(a.value.size())) != 0)
      return false;
  }
  return true;
}

GradBuffer::GradBuffer(const ParamSet& params) {
  g.reserve(params.size());
  for (const auto& p : params) g.push_back(Matrix::Zero(p.value.rows(), p.value.cols()));
}

void GradBuffer::zero() {
  for (auto& m : g) m.setZero();
}

void GradBuffer::add(const GradBuffer& other) {
  if (other.g.size() != g.size()) throw ModelError("gradient buffers differ in size");
  for (std::size_t i = 0; i < g.size(); ++i) g[i] += other.g[i];
}

void GradBuffer::scale(double s) {
  for (auto& m : g) m *= s;
}

double GradBuffer::squared_norm() const {
  double s = 0.0;
  for (const auto& m : g) s += m.squaredNorm();
  return s;
}

Matrix init_uniform(int rows, int cols, int fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(std::max(fan_in, 1)));
  std::uniform_real_distribution<double> u(-bound, bound);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

}  // namespace cvrpdiff::nn
