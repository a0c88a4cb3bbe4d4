#pragma once

// Dense row-major tensor of doubles: the unit of all numeric and
// differentiable computation here. Shapes are small (vectors and 2-D
// matrices); values are expected to stay finite after every public
// operation unless the operation's error contract says otherwise.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "dkc/errors.hpp"

namespace dkc {

using Vec = std::vector<double>;

struct Tensor {
  std::vector<int> shape;
  std::vector<double> data;

  Tensor() = default;
  Tensor(std::vector<int> s, std::vector<double> d) : shape(std::move(s)), data(std::move(d)) {
    if (element_count(shape) != static_cast<std::int64_t>(data.size()))
      throw DimError("tensor: shape/data size mismatch");
  }

  static std::int64_t element_count(const std::vector<int>& s) {
    std::int64_t n = 1;
    for (int d : s) {
      if (d < 0) throw DimError("tensor: negative dimension");
      n *= d;
    }
    return s.empty() ? 0 : n;
  }

  static Tensor zeros(std::vector<int> s) {
    auto n = element_count(s);
    return Tensor(std::move(s), std::vector<double>(static_cast<std::size_t>(n), 0.0));
  }

  static Tensor full(std::vector<int> s, double v) {
    auto n = element_count(s);
    return Tensor(std::move(s), std::vector<double>(static_cast<std::size_t>(n), v));
  }

  static Tensor scalar(double v) { return Tensor({1}, {v}); }

  static Tensor vector(Vec v) {
    int n = static_cast<int>(v.size());
    return Tensor({n}, std::move(v));
  }

  static Tensor matrix(int r, int c, Vec v) { return Tensor({r, c}, std::move(v)); }

  std::int64_t size() const { return static_cast<std::int64_t>(data.size()); }
  int rank() const { return static_cast<int>(shape.size()); }

  // 2-D accessors; rank-1 tensors are treated as a single row.
  int rows() const { return rank() == 2 ? shape[0] : 1; }
  int cols() const { return rank() == 2 ? shape[1] : (rank() == 1 ? shape[0] : 0); }

  double& at(int i, int j) { return data[static_cast<std::size_t>(i) * cols() + j]; }
  double at(int i, int j) const { return data[static_cast<std::size_t>(i) * cols() + j]; }
  double& operator[](std::size_t i) { return data[i]; }
  double operator[](std::size_t i) const { return data[i]; }

  double* row_ptr(int i) { return data.data() + static_cast<std::size_t>(i) * cols(); }
  const double* row_ptr(int i) const { return data.data() + static_cast<std::size_t>(i) * cols(); }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }

  bool is_finite() const {
    for (double v : data)
      if (!std::isfinite(v)) return false;
    return true;
  }

  void fill(double v) { std::fill(data.begin(), data.end(), v); }

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape == b.shape && a.data == b.data;
  }
};

inline std::string shape_str(const Tensor& t) {
  std::string s = "[";
  for (std::size_t i = 0; i < t.shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(t.shape[i]);
  }
  return s + "]";
}

inline double max_abs(const Tensor& t) {
  double m = 0.0;
  for (double v : t.data) m = std::max(m, std::fabs(v));
  return m;
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) throw DimError("max_abs_diff: shape mismatch " + shape_str(a) + " vs " + shape_str(b));
  double m = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) m = std::max(m, std::fabs(a.data[i] - b.data[i]));
  return m;
}

}  // namespace dkc
