#pragma once

#include <string>

#include "dafd/hyperparams.hpp"
#include "dafd/nn/adam.hpp"
#include "dafd/nn/model.hpp"

namespace dafd::nn {

struct Checkpoint {
  ModelParams params;
  AdamState adam;
  Hyperparams hp;

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

/// Text container, one tensor per line with a shape header; values are hex
/// floats so the round trip is bit-exact.
std::string checkpoint_to_text(const Checkpoint& ckpt);
/// Throws DataError on malformed input, missing tensors or shape mismatch.
Checkpoint checkpoint_from_text(const std::string& text);

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace dafd::nn
