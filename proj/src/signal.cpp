#include "dafd/signal.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "dafd/error.hpp"
#include "dafd/text_io.hpp"

namespace dafd {

ResampleFactor::ResampleFactor(std::int64_t p, std::int64_t q) {
  if (p < 1 || q < 1) throw ConfigError("resample factor terms must be >= 1");
  const std::int64_t g = std::gcd(p, q);
  p_ = p / g;
  q_ = q / g;
}

ResampleFactor rational_factor(double source_hz, double target_hz) {
  if (!(source_hz > 0.0) || !(target_hz > 0.0)) {
    throw ConfigError("sample rates must be positive");
  }
  double scale = 1.0;
  for (int d = 0; d <= 6; ++d, scale *= 10.0) {
    const double s = source_hz * scale;
    const double t = target_hz * scale;
    const double rs = std::round(s);
    const double rt = std::round(t);
    if (std::abs(s - rs) <= 1e-9 * std::max(1.0, s) && std::abs(t - rt) <= 1e-9 * std::max(1.0, t)) {
      return ResampleFactor(static_cast<std::int64_t>(rt), static_cast<std::int64_t>(rs));
    }
  }
  throw ConfigError("sample rates need more than 6 decimal digits: " + format_double(source_hz) +
                    " -> " + format_double(target_hz));
}

TrialRecord resample(const TrialRecord& trial, const ResampleFactor& factor) {
  const auto n = static_cast<std::int64_t>(trial.samples.size());
  if (n < 2) throw DataError("resample: trial " + trial.trial_id + " has fewer than 2 samples");
  TrialRecord out = trial;
  out.sample_rate_hz = trial.sample_rate_hz * static_cast<double>(factor.p()) /
                       static_cast<double>(factor.q());
  if (factor.is_identity()) return out;

  const std::int64_t p = factor.p();
  const std::int64_t q = factor.q();
  const std::int64_t m = (n - 1) * p / q + 1;
  out.samples.resize(static_cast<std::size_t>(m));
  for (std::int64_t k = 0; k < m; ++k) {
    // Fractional index k*q/p split exactly into integer part and remainder.
    const std::int64_t num = k * q;
    const std::int64_t i = num / p;
    const std::int64_t r = num % p;
    const Vec3& a = trial.samples[static_cast<std::size_t>(i)];
    if (r == 0) {
      out.samples[static_cast<std::size_t>(k)] = a;
      continue;
    }
    const Vec3& b = trial.samples[static_cast<std::size_t>(i + 1)];
    const double frac = static_cast<double>(r) / static_cast<double>(p);
    out.samples[static_cast<std::size_t>(k)] = {a.x + frac * (b.x - a.x), a.y + frac * (b.y - a.y),
                                                a.z + frac * (b.z - a.z)};
  }
  return out;
}

double norm_xyz(const Vec3& s) { return std::sqrt(s.x * s.x + s.y * s.y + s.z * s.z); }

std::size_t impact_index(const std::vector<Vec3>& samples) {
  if (samples.empty()) throw DataError("impact_index: empty trial");
  std::size_t best = 0;
  double best_norm = norm_xyz(samples[0]);
  for (std::size_t i = 1; i < samples.size(); ++i) {
    const double v = norm_xyz(samples[i]);
    if (v > best_norm) {
      best_norm = v;
      best = i;
    }
  }
  return best;
}

Segment impact_window(const TrialRecord& trial, const WindowConfig& cfg) {
  if (trial.samples.empty()) throw DataError("impact_window: trial " + trial.trial_id + " is empty");
  if (cfg.ws_b < 0 || cfg.ws_f < 0) throw ConfigError("window sizes must be non-negative");
  if (std::abs(trial.sample_rate_hz - cfg.rate_hz) > 1e-6 * cfg.rate_hz) {
    throw DataError("impact_window: trial " + trial.trial_id + " is at " +
                    format_double(trial.sample_rate_hz) + " Hz, expected " + format_double(cfg.rate_hz));
  }
  const auto p = static_cast<std::int64_t>(impact_index(trial.samples));
  const auto n = static_cast<std::int64_t>(trial.samples.size());
  const int len = cfg.length();

  Segment seg;
  seg.length = len;
  seg.values.resize(static_cast<std::size_t>(3 * len));
  seg.label = trial.label;
  seg.subject_id = trial.subject_id;
  seg.trial_id = trial.trial_id;
  seg.dataset_id = trial.dataset_id;
  seg.position = trial.position;
  seg.impact_index = cfg.ws_b;
  for (int t = 0; t < len; ++t) {
    const std::int64_t src = std::clamp<std::int64_t>(p - cfg.ws_b + t, 0, n - 1);
    const Vec3& s = trial.samples[static_cast<std::size_t>(src)];
    seg.values[static_cast<std::size_t>(t)] = s.x;
    seg.values[static_cast<std::size_t>(len + t)] = s.y;
    seg.values[static_cast<std::size_t>(2 * len + t)] = s.z;
  }
  return seg;
}

Segment minmax_normalize(Segment segment) {
  const int len = segment.length;
  for (int axis = 0; axis < 3; ++axis) {
    const auto begin = segment.values.begin() + axis * len;
    const auto end = begin + len;
    const auto [lo_it, hi_it] = std::minmax_element(begin, end);
    const double lo = *lo_it;
    const double hi = *hi_it;
    if (hi == lo) {
      std::fill(begin, end, 0.0);
      continue;
    }
    const double range = hi - lo;
    for (auto it = begin; it != end; ++it) *it = (*it - lo) / range;
  }
  return segment;
}

Segment preprocess(const TrialRecord& trial, double target_rate_hz, const WindowConfig& cfg,
                   Domain domain) {
  if (trial.samples.size() < 2) {
    throw DataError("preprocess: trial " + trial.trial_id + " has fewer than 2 samples");
  }
  const ResampleFactor factor = rational_factor(trial.sample_rate_hz, target_rate_hz);
  TrialRecord resampled = resample(trial, factor);
  // p/q is exact, so snap the nominal rate to avoid 1-ulp drift.
  resampled.sample_rate_hz = target_rate_hz;
  Segment seg = minmax_normalize(impact_window(resampled, cfg));
  seg.domain = domain;
  return seg;
}

std::vector<Segment> preprocess_all(const std::vector<TrialRecord>& trials, const WindowConfig& cfg,
                                    const std::vector<Domain>& domains,
                                    std::vector<Exclusion>* exclusions) {
  if (!domains.empty() && domains.size() != trials.size()) {
    throw ConfigError("preprocess_all: one domain tag per trial required");
  }
  std::vector<Segment> out;
  out.reserve(trials.size());
  for (std::size_t i = 0; i < trials.size(); ++i) {
    const TrialRecord& t = trials[i];
    try {
      validate_trial(t);
      if (t.samples.size() < 2) throw DataError("fewer than 2 samples");
      const ResampleFactor f = rational_factor(t.sample_rate_hz, cfg.rate_hz);
      const std::int64_t m = (static_cast<std::int64_t>(t.samples.size()) - 1) * f.p() / f.q() + 1;
      if (m < cfg.length()) {
        throw DataError("only " + std::to_string(m) + " samples after resampling");
      }
      out.push_back(preprocess(t, cfg.rate_hz, cfg, domains.empty() ? Domain::kSource : domains[i]));
    } catch (const DataError& e) {
      if (exclusions) exclusions->push_back({t.trial_id, e.what()});
    }
  }
  return out;
}

std::string segment_dump_csv(const std::vector<Segment>& segments) {
  std::ostringstream out;
  const int len = segments.empty() ? 66 : segments.front().length;
  for (const char axis : {'x', 'y', 'z'}) {
    for (int t = 0; t < len; ++t) out << axis << t << ',';
  }
  out << "label,domain\n";
  for (const Segment& s : segments) {
    if (s.length != len) throw DataError("segment dump: mixed window lengths");
    for (double v : s.values) out << format_double(v) << ',';
    out << (s.label ? std::string(to_string(*s.label)) : std::string()) << ',' << to_string(s.domain)
        << "\n";
  }
  return out.str();
}

std::vector<Segment> parse_segment_dump(const std::string& csv, int length) {
  std::istringstream in(csv);
  std::string line;
  std::vector<Segment> out;
  if (!std::getline(in, line)) return out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != static_cast<std::size_t>(3 * length + 2)) {
      throw DataError("segment dump line " + std::to_string(line_no) + ": wrong column count");
    }
    Segment s;
    s.length = length;
    s.impact_index = 0;
    for (int i = 0; i < 3 * length; ++i) {
      const auto v = parse_double(f[static_cast<std::size_t>(i)]);
      if (!v) throw DataError("segment dump line " + std::to_string(line_no) + ": bad value");
      s.values.push_back(*v);
    }
    if (!trim(f[static_cast<std::size_t>(3 * length)]).empty()) {
      s.label = parse_label(f[static_cast<std::size_t>(3 * length)]);
    }
    s.domain = parse_domain(f[static_cast<std::size_t>(3 * length + 1)]);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace dafd
