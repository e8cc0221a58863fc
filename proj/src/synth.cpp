#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "dafd/error.hpp"
#include "dafd/ingest.hpp"

namespace dafd {
namespace {

constexpr double kPi = std::numbers::pi;

// Body frame: z up, so a standing wearer reads (0, 0, 1) g.
struct Vec {
  double x, y, z;
};

Vec operator+(Vec a, Vec b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
Vec operator*(double s, Vec a) { return {s * a.x, s * a.y, s * a.z}; }
double norm(Vec a) { return std::sqrt(a.x * a.x + a.y * a.y + a.z * a.z); }
Vec unit(Vec a) { return (1.0 / norm(a)) * a; }

// Direction with polar angle `tilt` from vertical and azimuth `azimuth`.
Vec direction(double tilt, double azimuth) {
  return {std::sin(tilt) * std::cos(azimuth), std::sin(tilt) * std::sin(azimuth), std::cos(tilt)};
}

struct SubjectStyle {
  double posture_tilt;     // standing sensor tilt (rad), sagittal
  double sagittal_azimuth; // heading of the wearer's forward direction
  double intensity;        // scales event amplitudes
};

// One activity: a posture change, an optional low-norm phase (free fall,
// airborne or descent), an optional impact pulse and periodic motion.
struct Event {
  Vec g_before{0, 0, 1};
  Vec g_after{0, 0, 1};
  double transition_start = 0.0;
  double transition_len = 1.0;
  double dip_start = 0.0;
  double dip_len = 0.0;
  double dip_level = 1.0;
  Vec spike_dir{0, 0, 1};
  double spike_time = 0.0;
  double spike_width = 0.0;
  double spike_peak = 0.0;
  double vib_amp = 0.0;
  double vib_freq = 5.0;
  double vib_len = 0.4;
  Vec osc_dir{1, 0, 0};
  double osc_amp = 0.0;
  double osc_freq = 1.0;
  double osc_phase = 0.0;
  double bounce_amp = 0.0;
};

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

double gaussian(std::mt19937_64& rng, double sigma) {
  return std::normal_distribution<double>(0.0, sigma)(rng);
}

double smoothstep(double x) {
  x = std::clamp(x, 0.0, 1.0);
  return x * x * (3.0 - 2.0 * x);
}

SubjectStyle draw_subject(std::mt19937_64& rng) {
  SubjectStyle s;
  s.posture_tilt = std::abs(gaussian(rng, 0.08));
  s.sagittal_azimuth = gaussian(rng, 0.08);
  s.intensity = uniform(rng, 0.85, 1.15);
  return s;
}

Vec horizontal(double azimuth) { return {std::cos(azimuth), std::sin(azimuth), 0.0}; }

// Activities of daily living move in the sagittal plane (x forward, z up).
Event draw_adl(const SubjectStyle& s, int activity, double duration, std::mt19937_64& rng) {
  Event e;
  const double fwd = s.sagittal_azimuth + gaussian(rng, 0.05);
  e.g_before = direction(s.posture_tilt, fwd);
  e.g_after = e.g_before;
  const double t0 = uniform(rng, 0.4, 0.6) * duration;
  e.spike_time = t0;
  e.spike_width = 0.1;
  e.osc_dir = horizontal(fwd);
  e.osc_phase = uniform(rng, 0.0, 2.0 * kPi);
  const double k = s.intensity;
  switch (activity) {
    case 1:  // walking
      e.osc_amp = k * uniform(rng, 0.15, 0.35);
      e.osc_freq = uniform(rng, 0.8, 1.1);
      e.bounce_amp = k * uniform(rng, 0.2, 0.4);
      e.spike_peak = 0.0;
      break;
    case 2:  // jumping
      e.dip_start = t0 - uniform(rng, 0.25, 0.35);
      e.dip_len = t0 - e.dip_start;
      e.dip_level = uniform(rng, 0.1, 0.3);
      e.spike_dir = unit(Vec{0, 0, 1} + uniform(rng, 0.1, 0.5) * horizontal(fwd + kPi));
      e.spike_peak = k * uniform(rng, 2.5, 4.0);
      e.vib_amp = 0.5;
      break;
    case 3:  // sitting down
      e.dip_start = t0 - uniform(rng, 0.3, 0.5);
      e.dip_len = t0 - e.dip_start;
      e.dip_level = uniform(rng, 0.4, 0.7);
      e.spike_dir = unit(Vec{0, 0, 1} + uniform(rng, 0.3, 0.8) * horizontal(fwd));
      e.spike_peak = k * uniform(rng, 1.8, 3.0);
      e.g_after = direction(uniform(rng, 0.2, 0.6), fwd + kPi);
      e.transition_start = t0 - 0.2;
      e.transition_len = 0.6;
      e.vib_amp = 0.3;
      break;
    case 4:  // lying down
      e.g_after = direction(uniform(rng, 1.2, 1.57), fwd + kPi);
      e.transition_start = t0 - uniform(rng, 0.8, 1.5);
      e.transition_len = t0 + 0.6 - e.transition_start;
      e.spike_dir = unit(Vec{0, 0, 1} + horizontal(fwd));
      e.spike_peak = k * uniform(rng, 1.3, 1.8);
      e.vib_amp = 0.1;
      break;
    case 5:  // bending to pick up an object
      e.g_after = direction(uniform(rng, 0.9, 1.3), fwd);
      e.transition_start = t0 - 0.8;
      e.transition_len = 0.8;
      e.spike_dir = unit(horizontal(fwd) + 0.5 * Vec{0, 0, 1});
      e.spike_peak = k * uniform(rng, 1.2, 1.6);
      e.osc_amp = k * uniform(rng, 0.05, 0.15);
      e.osc_freq = uniform(rng, 0.5, 1.0);
      break;
    default:  // stumble and recovery
      e.dip_start = t0 - uniform(rng, 0.1, 0.2);
      e.dip_len = t0 - e.dip_start;
      e.dip_level = uniform(rng, 0.4, 0.7);
      e.spike_dir = unit(horizontal(fwd + (uniform(rng, 0, 1) < 0.5 ? 0.0 : kPi)) + 0.4 * Vec{0, 0, 1});
      e.spike_peak = k * uniform(rng, 1.8, 2.8);
      e.vib_amp = 0.4;
      e.osc_amp = k * uniform(rng, 0.1, 0.25);
      e.osc_freq = uniform(rng, 0.8, 1.1);
      break;
  }
  return e;
}

// Falls: F1 forward, F2 backward, F3 and F4 lateral, F5 backward onto the
// buttocks ending seated.
Event draw_fall(const SubjectStyle& s, int activity, double duration, std::mt19937_64& rng) {
  Event e;
  const double fwd = s.sagittal_azimuth;
  e.g_before = direction(s.posture_tilt, fwd);
  static constexpr double kHeadings[] = {0.0, kPi, 0.5 * kPi, -0.5 * kPi, kPi};
  const double heading = fwd + kHeadings[activity - 1] + gaussian(rng, 0.3);
  const double rest_tilt = activity == 5 ? uniform(rng, 0.3, 0.7) : uniform(rng, 1.2, 1.57);
  e.g_after = direction(rest_tilt, heading);
  const double t0 = uniform(rng, 0.4, 0.6) * duration;
  e.spike_time = t0;
  e.spike_width = 0.1;
  e.dip_start = t0 - uniform(rng, 0.25, 0.4);
  e.dip_len = t0 - e.dip_start;
  e.dip_level = uniform(rng, 0.1, 0.3);
  e.transition_start = e.dip_start;
  e.transition_len = t0 - e.dip_start + 0.1;
  e.spike_dir = unit(uniform(rng, 0.6, 1.2) * horizontal(heading + kPi) + Vec{0, 0, 1});
  e.spike_peak = s.intensity * uniform(rng, 2.8, 5.0);
  e.vib_amp = 0.6;
  e.vib_freq = uniform(rng, 4.0, 6.0);
  e.osc_dir = horizontal(fwd);
  e.osc_amp = s.intensity * uniform(rng, 0.03, 0.1);
  e.osc_freq = uniform(rng, 0.5, 1.5);
  e.osc_phase = uniform(rng, 0.0, 2.0 * kPi);
  return e;
}

Vec render(const Event& e, double t) {
  const double s = smoothstep((t - e.transition_start) / e.transition_len);
  Vec v = unit((1.0 - s) * e.g_before + s * e.g_after);
  if (t >= e.dip_start && t < e.dip_start + e.dip_len) {
    const double ramp = std::min(1.0, (t - e.dip_start) / 0.1);
    v = (1.0 - (1.0 - e.dip_level) * ramp) * v;
  }
  const double spike_end = e.spike_time + e.spike_width;
  if (e.spike_peak > 0.0 && t >= e.spike_time && t < spike_end) v = e.spike_peak * e.spike_dir;
  const double after = t - spike_end;
  if (e.spike_peak > 0.0 && after >= 0.0 && after < e.vib_len) {
    const double decay = std::exp(-after / (0.3 * e.vib_len));
    v = v + (e.vib_amp * decay * std::sin(2.0 * kPi * e.vib_freq * after)) * e.spike_dir;
  }
  const double phase = 2.0 * kPi * e.osc_freq * t + e.osc_phase;
  v = v + (e.osc_amp * std::sin(phase)) * e.osc_dir;
  v = v + (e.bounce_amp * std::sin(2.0 * phase)) * Vec{0, 0, 1};
  return v;
}

Vec apply_shift(const DomainShift& shift, Vec v) {
  const double c = std::cos(shift.rotation_rad);
  const double s = std::sin(shift.rotation_rad);
  const Vec rotated{c * v.x - s * v.y, s * v.x + c * v.y, v.z};
  return {shift.gain[0] * rotated.x + shift.offset[0], shift.gain[1] * rotated.y + shift.offset[1],
          shift.gain[2] * rotated.z + shift.offset[2]};
}

std::string two_digits(int v) {
  std::string s = std::to_string(v);
  return s.size() < 2 ? "0" + s : s;
}

}  // namespace

bool DomainShift::is_identity() const {
  return rotation_rad == 0.0 && gain == std::array<double, 3>{1.0, 1.0, 1.0} &&
         offset == std::array<double, 3>{0.0, 0.0, 0.0} && !rate_override_hz;
}

void validate_synth_spec(const SynthSpec& spec) {
  if (spec.n_subjects < 1) throw ConfigError("synth: n_subjects must be positive");
  if (spec.trials_per_class_per_subject < 1) {
    throw ConfigError("synth: trials_per_class_per_subject must be positive");
  }
  if (!(spec.rate_hz > 0.0)) throw ConfigError("synth: rate_hz must be positive");
  if (!(spec.duration_s >= 4.0)) throw ConfigError("synth: duration_s must be at least 4 s");
  if (!(spec.noise_sigma >= 0.0)) throw ConfigError("synth: noise_sigma must be non-negative");
  for (double g : spec.domain_shift.gain) {
    if (g == 0.0 || !std::isfinite(g)) throw ConfigError("synth: gains must be non-zero");
  }
  if (spec.domain_shift.rate_override_hz && !(*spec.domain_shift.rate_override_hz > 0.0)) {
    throw ConfigError("synth: rate override must be positive");
  }
  if (spec.dataset_id.empty() || spec.source_position.empty() || spec.target_position.empty()) {
    throw ConfigError("synth: dataset and positions must be non-empty");
  }
  if (spec.source_position == spec.target_position) {
    throw ConfigError("synth: source and target positions must differ");
  }
}

std::vector<TrialRecord> synth_trials_with_events(const SynthSpec& spec, Domain domain,
                                                  std::vector<std::optional<ImpactInterval>>* events) {
  validate_synth_spec(spec);
  const bool target = domain == Domain::kTarget;
  const double rate =
      target && spec.domain_shift.rate_override_hz ? *spec.domain_shift.rate_override_hz : spec.rate_hz;
  const auto n_samples = static_cast<std::size_t>(std::llround(spec.duration_s * rate));
  const std::string& position = target ? spec.target_position : spec.source_position;

  std::vector<TrialRecord> trials;
  if (events) events->clear();
  for (int subject = 0; subject < spec.n_subjects; ++subject) {
    std::mt19937_64 subject_rng(derive_seed(spec.seed, static_cast<std::uint64_t>(subject)));
    const SubjectStyle style = draw_subject(subject_rng);
    const std::string subject_id = "S" + two_digits(subject + 1);

    for (Label label : {Label::kAdl, Label::kFall}) {
      for (int k = 0; k < spec.trials_per_class_per_subject; ++k) {
        // Latent events and sensor noise come from the same per-trial stream in
        // both domains, so an identity shift reproduces the source exactly.
        const std::uint64_t trial_stream =
            (static_cast<std::uint64_t>(subject) << 32) |
            (static_cast<std::uint64_t>(label == Label::kFall) << 31) | static_cast<std::uint64_t>(k);
        std::mt19937_64 rng(derive_seed(spec.seed ^ 0x5eedULL, trial_stream));

        TrialRecord t;
        t.subject_id = subject_id;
        t.dataset_id = spec.dataset_id;
        t.position = position;
        t.label = label;
        t.sample_rate_hz = rate;
        std::optional<ImpactInterval> interval;

        if (label == Label::kAdl) {
          const int activity = 1 + (k % 6);
          t.activity_code = "A" + std::to_string(activity);
          const Event e = draw_adl(style, activity, spec.duration_s, rng);
          std::mt19937_64 noise_rng(rng());
          for (std::size_t i = 0; i < n_samples; ++i) {
            const Vec v = apply_shift(target ? spec.domain_shift : DomainShift{},
                                      render(e, static_cast<double>(i) / rate));
            t.samples.push_back({v.x + gaussian(noise_rng, spec.noise_sigma),
                                 v.y + gaussian(noise_rng, spec.noise_sigma),
                                 v.z + gaussian(noise_rng, spec.noise_sigma)});
          }
        } else {
          const int activity = 1 + (k % 5);
          t.activity_code = "F" + std::to_string(activity);
          const Event e = draw_fall(style, activity, spec.duration_s, rng);
          std::mt19937_64 noise_rng(rng());
          ImpactInterval spike{n_samples, 0};
          for (std::size_t i = 0; i < n_samples; ++i) {
            const double time = static_cast<double>(i) / rate;
            if (time >= e.spike_time && time < e.spike_time + e.spike_width) {
              spike.begin = std::min(spike.begin, i);
              spike.end = i + 1;
            }
            const Vec v = apply_shift(target ? spec.domain_shift : DomainShift{}, render(e, time));
            t.samples.push_back({v.x + gaussian(noise_rng, spec.noise_sigma),
                                 v.y + gaussian(noise_rng, spec.noise_sigma),
                                 v.z + gaussian(noise_rng, spec.noise_sigma)});
          }
          if (spike.end == 0) {
            // Spike narrower than one sample period: keep the nearest sample.
            const auto i = static_cast<std::size_t>(std::ceil(e.spike_time * rate));
            spike = {i, i + 1};
            const Vec v = apply_shift(target ? spec.domain_shift : DomainShift{},
                                      e.spike_peak * e.spike_dir);
            t.samples[i] = {v.x, v.y, v.z};
          }
          interval = spike;
        }
        t.trial_id = spec.dataset_id + "_" + position + "_" + subject_id + "_" + t.activity_code +
                     "_" + std::to_string(k);
        trials.push_back(std::move(t));
        if (events) events->push_back(interval);
      }
    }
  }
  return trials;
}

std::vector<TrialRecord> synth_trials(const SynthSpec& spec, Domain domain) {
  return synth_trials_with_events(spec, domain, nullptr);
}

std::vector<TrialRecord> synth_corpus(const SynthSpec& spec) {
  std::vector<TrialRecord> all = synth_trials(spec, Domain::kSource);
  std::vector<TrialRecord> target = synth_trials(spec, Domain::kTarget);
  all.insert(all.end(), std::make_move_iterator(target.begin()), std::make_move_iterator(target.end()));
  return all;
}

}  // namespace dafd
