#pragma once

#include <array>

namespace dafd {

struct Hyperparams {
  double dropout = 0.2;
  double lr = 0.001;
  double lambda = 1.0;

  friend bool operator==(const Hyperparams&, const Hyperparams&) = default;
};

/// Throws ConfigError unless dropout in [0, 1), lr > 0 and lambda >= 0.
void validate(const Hyperparams& hp);

inline constexpr std::array<double, 3> kGridDropout{0.1, 0.2, 0.5};
inline constexpr std::array<double, 3> kGridLearningRate{0.001, 0.0005, 0.0001};
inline constexpr std::array<double, 3> kGridLambda{0.31, 1.0, 1.3};

inline constexpr double kWeightDecay = 0.01;

}  // namespace dafd
