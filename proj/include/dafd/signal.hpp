#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dafd/ingest.hpp"
#include "dafd/types.hpp"

namespace dafd {

/// Rational resampling factor p/q (interpolate by p, decimate by q), always
/// stored in lowest terms.
class ResampleFactor {
 public:
  ResampleFactor() = default;
  /// Throws ConfigError unless p >= 1 and q >= 1.
  ResampleFactor(std::int64_t p, std::int64_t q);

  std::int64_t p() const { return p_; }
  std::int64_t q() const { return q_; }
  bool is_identity() const { return p_ == q_; }

  friend bool operator==(const ResampleFactor&, const ResampleFactor&) = default;

 private:
  std::int64_t p_ = 1;
  std::int64_t q_ = 1;
};

/// Factor taking `source_hz` to `target_hz`: both rates are scaled by the
/// smallest 10^d (d <= 6) that makes them integral, then reduced.
/// 20 -> 18.4 gives 23/25 and 200 -> 18.4 gives 23/250.
ResampleFactor rational_factor(double source_hz, double target_hz);

struct WindowConfig {
  int ws_b = 37;  // samples before the impact point
  int ws_f = 28;  // samples after the impact point
  double rate_hz = 18.4;

  int length() const { return ws_b + 1 + ws_f; }
};

/// Preprocessed window, axis-major: values[axis * length + t].
struct Segment {
  std::vector<double> values;
  int length = 0;
  std::optional<Label> label;
  Domain domain = Domain::kSource;
  std::string subject_id;
  std::string trial_id;
  std::string dataset_id;
  std::string position;
  int impact_index = 0;

  double at(int axis, int t) const { return values[static_cast<std::size_t>(axis * length + t)]; }
};

/// Linear interpolation at fractional input index k*q/p per axis.
/// Output length floor((n-1)*p/q) + 1, output rate = input rate * p/q.
TrialRecord resample(const TrialRecord& trial, const ResampleFactor& factor);

double norm_xyz(const Vec3& sample);

/// Index of the first maximum of norm_xyz.
std::size_t impact_index(const std::vector<Vec3>& samples);

/// Window of ws_b + 1 + ws_f samples around the impact point, replicating the
/// edge samples when the window runs past either end of the trial.
Segment impact_window(const TrialRecord& trial, const WindowConfig& cfg);

/// Per-axis min-max scaling to [0, 1]; constant axes map to zero.
Segment minmax_normalize(Segment segment);

/// resample -> impact_window -> minmax_normalize.
Segment preprocess(const TrialRecord& trial, double target_rate_hz, const WindowConfig& cfg,
                   Domain domain = Domain::kSource);

struct Exclusion {
  std::string trial_id;
  std::string reason;
};

/// Preprocesses many trials, skipping (and reporting) trials that are
/// non-finite or shorter than one window after resampling.
std::vector<Segment> preprocess_all(const std::vector<TrialRecord>& trials, const WindowConfig& cfg,
                                    const std::vector<Domain>& domains,
                                    std::vector<Exclusion>* exclusions);

/// Segment dump: one row per segment, 66 x, 66 y, 66 z values, label, domain.
std::string segment_dump_csv(const std::vector<Segment>& segments);
std::vector<Segment> parse_segment_dump(const std::string& csv, int length = 66);

}  // namespace dafd
