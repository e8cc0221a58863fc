#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace dafd {

enum class Label : int { kAdl = 0, kFall = 1 };
enum class Domain : int { kSource = 0, kTarget = 1 };

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend bool operator==(const Vec3&, const Vec3&) = default;
};

std::string_view to_string(Label label);
std::string_view to_string(Domain domain);

// Accepts "ADL"/"Fall" (case-insensitive) and "0"/"1".
Label parse_label(std::string_view text);
// Accepts "source"/"target" (case-insensitive) and "0"/"1".
Domain parse_domain(std::string_view text);

// SplitMix64 mixing of a master seed with a stream index. Used wherever an
// independent, reproducible sub-stream is needed (grid tuples, folds, jobs).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

}  // namespace dafd
