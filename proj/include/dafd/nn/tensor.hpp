#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace dafd::nn {

/// Dense row-major double tensor.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> values;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> dims, double fill = 0.0);

  std::size_t size() const { return values.size(); }
  std::size_t dim(std::size_t i) const { return shape.at(i); }
  std::size_t rank() const { return shape.size(); }

  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }

  double& at(std::size_t i, std::size_t j) { return values[i * shape[1] + j]; }
  double at(std::size_t i, std::size_t j) const { return values[i * shape[1] + j]; }
  double& at(std::size_t i, std::size_t j, std::size_t k) {
    return values[(i * shape[1] + j) * shape[2] + k];
  }
  double at(std::size_t i, std::size_t j, std::size_t k) const {
    return values[(i * shape[1] + j) * shape[2] + k];
  }

  std::span<double> span() { return values; }
  std::span<const double> span() const { return values; }

  bool same_shape(const Tensor& other) const { return shape == other.shape; }

  friend bool operator==(const Tensor&, const Tensor&) = default;
};

std::string shape_string(const std::vector<std::size_t>& shape);

/// Throws NumericError naming `where` if any value is NaN or Inf.
void check_finite(const Tensor& t, const char* where);

/// Throws NumericError when the shape differs from `expected`.
void check_shape(const Tensor& t, const std::vector<std::size_t>& expected, const char* where);

}  // namespace dafd::nn
