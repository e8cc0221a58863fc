#include "dafd/nn/tensor.hpp"

#include <cmath>
#include <functional>
#include <numeric>

#include "dafd/error.hpp"

namespace dafd::nn {

Tensor::Tensor(std::vector<std::size_t> dims, double fill) : shape(std::move(dims)) {
  const std::size_t n =
      std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
  values.assign(n, fill);
}

std::string shape_string(const std::vector<std::size_t>& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

void check_finite(const Tensor& t, const char* where) {
  for (std::size_t i = 0; i < t.values.size(); ++i) {
    if (!std::isfinite(t.values[i])) {
      throw NumericError(std::string(where) + ": non-finite value at flat index " + std::to_string(i));
    }
  }
}

void check_shape(const Tensor& t, const std::vector<std::size_t>& expected, const char* where) {
  if (t.shape != expected) {
    throw NumericError(std::string(where) + ": shape " + shape_string(t.shape) + ", expected " +
                       shape_string(expected));
  }
}

}  // namespace dafd::nn
