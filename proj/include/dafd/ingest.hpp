#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dafd/types.hpp"

namespace dafd {

/// One recorded activity trial in canonical form. Samples are in g.
struct TrialRecord {
  std::string trial_id;
  std::string subject_id;
  std::string dataset_id;
  std::string position;       // N, WA, RP, LP, WR, A, C
  std::string activity_code;  // A1..A11, F1..F5
  Label label = Label::kAdl;
  double sample_rate_hz = 0.0;
  std::vector<Vec3> samples;
};

/// Throws DataError when a record breaks the canonical invariants
/// (non-empty finite samples, positive rate, label consistent with the code).
void validate_trial(const TrialRecord& trial);

// ---------------------------------------------------------------------------
// Canonical storage: manifest.csv + one CSV (ax,ay,az) per trial.
// ---------------------------------------------------------------------------

inline constexpr const char* kManifestHeader =
    "trial_id,subject_id,dataset_id,position,activity_code,label,sample_rate_hz,path";

/// Reads a manifest and every trial it references. Trial paths are resolved
/// relative to the manifest's directory. Errors carry file and line.
std::vector<TrialRecord> load_canonical(const std::filesystem::path& manifest_path);

/// Writes `dir/manifest.csv` and `dir/trials/<trial_id>.csv`. Returns the
/// manifest path. Values are written with 17 significant digits.
std::filesystem::path write_canonical(const std::vector<TrialRecord>& trials,
                                      const std::filesystem::path& dir);

// ---------------------------------------------------------------------------
// Raw dataset adaptation.
// ---------------------------------------------------------------------------

enum class AccelUnit { kG, kMetersPerSecond2 };

inline constexpr double kStandardGravity = 9.80665;

/// How to read one family of raw export files. A column is addressed either by
/// header name or by zero-based index (a purely numeric entry).
struct ColumnMapping {
  std::string time_col;  // optional; empty when the export has no time column
  std::string x_col = "0";
  std::string y_col = "1";
  std::string z_col = "2";
  AccelUnit unit = AccelUnit::kG;
  double rate_hz = 0.0;
  std::string label_prefix_fall = "F";
  std::string label_prefix_adl = "A";
  char delimiter = ',';
  // Raw file names are split on '_' (extension stripped); these pick the
  // subject and activity fields, e.g. "S03_F2_T1.csv".
  int name_subject_field = 0;
  int name_activity_field = 1;
};

/// Parses a key = value mapping file (keys: time_col, x_col, y_col, z_col,
/// unit, rate_hz, label_prefix_fall, label_prefix_adl, delimiter,
/// name_subject_field, name_activity_field).
ColumnMapping load_column_mapping(const std::filesystem::path& path);

/// Applies the mapping's label rule. Throws DataError for unknown codes.
Label label_for_activity(const ColumnMapping& mapping, const std::string& activity_code);

/// Reads every regular *.csv / *.txt file under raw_dir (lexicographic order).
std::vector<TrialRecord> adapt_dataset(const std::filesystem::path& raw_dir,
                                       const ColumnMapping& mapping,
                                       const std::string& dataset_id,
                                       const std::string& position);

// ---------------------------------------------------------------------------
// Synthetic two-domain corpus.
// ---------------------------------------------------------------------------

struct DomainShift {
  double rotation_rad = 0.0;  // about the vertical (z) axis
  std::array<double, 3> gain{1.0, 1.0, 1.0};
  std::array<double, 3> offset{0.0, 0.0, 0.0};  // g
  std::optional<double> rate_override_hz;

  bool is_identity() const;
};

struct SynthSpec {
  int n_subjects = 20;
  int trials_per_class_per_subject = 6;
  double rate_hz = 20.0;
  double duration_s = 10.0;
  DomainShift domain_shift;
  double noise_sigma = 0.03;
  std::uint64_t seed = 0;
  std::string dataset_id = "synth";
  std::string source_position = "WA";
  std::string target_position = "RP";
};

void validate_synth_spec(const SynthSpec& spec);

/// Time span (in samples of the emitted trial) of the generated impact spike.
struct ImpactInterval {
  std::size_t begin = 0;
  std::size_t end = 0;  // exclusive
};

/// Generates one domain of the synthetic corpus. Both domains are rendered from
/// the same latent events; the target domain applies `spec.domain_shift`.
/// Trials are ordered by subject, then ADL before Fall, then trial index.
std::vector<TrialRecord> synth_trials(const SynthSpec& spec, Domain domain = Domain::kSource);

/// Same as synth_trials, additionally reporting the impact interval of each
/// Fall trial (nullopt for ADL trials).
std::vector<TrialRecord> synth_trials_with_events(const SynthSpec& spec, Domain domain,
                                                  std::vector<std::optional<ImpactInterval>>* events);

/// Source trials followed by target trials.
std::vector<TrialRecord> synth_corpus(const SynthSpec& spec);

}  // namespace dafd
