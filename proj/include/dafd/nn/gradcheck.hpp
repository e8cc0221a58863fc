#pragma once

#include <functional>
#include <string>

#include "dafd/nn/model.hpp"

namespace dafd::nn {

struct GradCheckOptions {
  double eps = 1e-5;
  /// Denominator floor of the relative error |a - n| / max(|a|, |n|, floor).
  double floor = 1e-6;
  /// Applied to the analytic gradients before comparison (mutation testing).
  std::function<void(ModelGrads&)> mutate;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t checked = 0;
  std::size_t skipped = 0;  // perturbation changed a ReLU mask or pool choice
};

/// Compares backward_pass against central differences for every learnable
/// scalar. Train-mode batch norm, dropout off. The objective differentiated is
/// loss_fall - lambda * loss_domain for extractor parameters and
/// loss_fall + loss_domain for head parameters, which is what the reversal
/// layer delivers to each group.
GradCheckResult grad_check(const ModelParams& params, const Tensor& batch, const LossTargets& targets,
                           double lambda, const GradCheckOptions& options = {});

/// Balanced targets for a batch of size B: rows alternate fall labels, the
/// first half is source and the second half target.
LossTargets default_check_targets(std::size_t batch);

}  // namespace dafd::nn
