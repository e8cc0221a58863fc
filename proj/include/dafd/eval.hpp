#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dafd/dann.hpp"
#include "dafd/ingest.hpp"
#include "dafd/signal.hpp"

namespace dafd {

// ---- metrics (Fall is the positive class) ----

struct ConfusionCounts {
  std::int64_t tp = 0;
  std::int64_t tn = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;

  std::int64_t total() const { return tp + tn + fp + fn; }
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

/// Throws DataError on a length mismatch.
ConfusionCounts confusion(const std::vector<Label>& predictions, const std::vector<Label>& labels);

struct MetricSet {
  double sen = 0.0;
  double spe = 0.0;
  double pre = 0.0;
  double f1 = 0.0;
  bool sen_degenerate = false;
  bool spe_degenerate = false;
  bool pre_degenerate = false;
  bool f1_degenerate = false;
};

/// SEN = tp/(tp+fn), SPE = tn/(tn+fp), PRE = tp/(tp+fp),
/// F1 = 2 SEN PRE / (SEN + PRE). A zero denominator yields 0 and sets the flag.
MetricSet metrics(const ConfusionCounts& c);

/// Unweighted mean of each metric; a flag is set when any input has it set.
MetricSet mean_metrics(const std::vector<MetricSet>& sets);

// ---- folds ----

struct FoldPlan {
  std::vector<std::vector<std::string>> groups;
  std::uint64_t seed = 0;

  /// Index of the group holding `subject`; throws DataError when absent.
  std::size_t group_of(const std::string& subject) const;
};

inline constexpr int kFolds = 5;

/// Distinct ids sorted, shuffled with `seed`, dealt round-robin into k groups.
/// Throws DataError with fewer than k distinct subjects.
FoldPlan lsocv_folds(std::vector<std::string> subject_ids, std::uint64_t seed, int k = kFolds);

// ---- pairs ----

enum class Scenario { kCrossPosition, kCrossConfig };
std::string_view to_string(Scenario scenario);
/// "cross_position" / "cross_config" (also "cross-position", "cross-config").
Scenario parse_scenario(std::string_view text);

inline constexpr const char* kUpFall = "upfall";
inline constexpr const char* kUmaFall = "umafall";

struct Endpoint {
  std::string dataset_id;
  std::string position;

  friend bool operator==(const Endpoint&, const Endpoint&) = default;
};

struct PairSpec {
  Scenario scenario = Scenario::kCrossPosition;
  Endpoint source;
  Endpoint target;

  /// "dataset.POS:dataset.POS"
  std::string id() const;
  friend bool operator==(const PairSpec&, const PairSpec&) = default;
};

/// Parses "dataset.POS:dataset.POS"; the scenario follows from whether the
/// datasets match. Throws ConfigError on malformed text or a pair that is
/// neither cross-position nor cross-config.
PairSpec parse_pair(std::string_view text);

/// The evaluation pair matrix. Cross-position: `dataset` is "upfall" (20 pairs), "umafall"
/// (12 pairs) or empty for both. Cross-config: 8 pairs, `dataset` ignored.
std::vector<PairSpec> enumerate_pairs(Scenario scenario, std::string_view dataset = {});

// ---- significance ----

struct TTest {
  double t = 0.0;
  double p = 1.0;
  bool significant = false;
};

inline constexpr double kAlpha = 0.05;

/// Two-sample pooled-variance Student t-test, two-tailed. Zero pooled
/// variance gives t = 0, p = 1 for equal means and |t| = inf, p = 0 otherwise.
/// Throws ConfigError when either sample has fewer than 2 values.
TTest ttest(const std::vector<double>& a, const std::vector<double>& b);

// ---- pair evaluation ----

/// Source and target pools of one pair, tagged with their domains.
struct PairData {
  SegmentPool source;
  SegmentPool target;
};

/// Selects segments by dataset and position. Throws DataError when either
/// side is empty.
PairData select_pair(const std::vector<Segment>& segments, const PairSpec& pair);

struct EvalConfig {
  TrainConfig train;  // mode is overridden per run
  /// Fixed hyperparameters; when empty every fold runs the 27-tuple grid.
  std::optional<Hyperparams> hp;
  std::vector<TrainMode> modes{kAllModes.begin(), kAllModes.end()};
  int jobs = 1;
};

struct FoldResult {
  int fold = 0;
  ConfusionCounts counts;
  MetricSet metrics;
  Hyperparams hp;
  int best_epoch = 0;
};

struct PairResult {
  PairSpec pair;
  TrainMode mode = TrainMode::kSourceOnly;
  std::vector<FoldResult> folds;
  MetricSet mean;
};

/// Five-fold leave-subjects-out evaluation of every requested mode. Folds are
/// shared when both sides come from one dataset and drawn per dataset (paired
/// by index) otherwise. Each fold trains on the non-test subjects and scores
/// the fall head on the test subjects' target segments. All modes of a fold
/// share the fold's seed.
std::vector<PairResult> run_pair(const PairSpec& pair, const PairData& data, const EvalConfig& cfg);

/// One row per (pair, mode, fold).
std::string results_csv(const std::vector<PairResult>& results);
/// Inverse of results_csv (metrics recomputed from the counts).
std::vector<PairResult> parse_results_csv(const std::string& csv);

// ---- report ----

struct Report {
  std::string text;
  std::string csv;
};

/// Report column of a pair: the dataset for cross-position, "src->tgt" for
/// cross-config.
std::string report_column(const PairSpec& pair);

/// SEN/SPE/PRE/F1 x mode rows, one column per report column, values are the
/// unweighted mean over the column's pairs in percent with two decimals.
/// '*' marks DAFD_adl and '†' marks DAFD when the t-test of their per-fold
/// scores against Source-only is significant. The CSV also carries per-pair
/// rows. Throws DataError on empty input.
Report build_report(const std::vector<PairResult>& results);

// ---- feature export ----

/// Header f0..f39,label,domain; eval-mode extractor output. Returns the row count.
std::size_t export_features(const nn::ModelParams& params, const std::vector<Segment>& segments,
                            const std::filesystem::path& path);
std::string features_csv(const nn::ModelParams& params, const std::vector<Segment>& segments);

// ---- synthetic benchmark ----

/// The built-in shift: 25 degree rotation about the vertical, gains
/// 0.9/1.1/1.0, no offset.
DomainShift benchmark_shift();

inline SynthSpec benchmark_spec() {
  SynthSpec spec;
  spec.domain_shift = benchmark_shift();
  return spec;
}

inline TrainConfig benchmark_train_config() {
  TrainConfig cfg;
  cfg.max_epochs = 200;
  cfg.patience = 200;
  return cfg;
}

struct BenchmarkConfig {
  SynthSpec spec = benchmark_spec();  // seed is replaced per repetition
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  Hyperparams hp{0.2, 0.001, 1.3};
  TrainConfig train = benchmark_train_config();
  std::vector<TrainMode> modes{kAllModes.begin(), kAllModes.end()};
  int jobs = 1;
};

struct BenchmarkResult {
  std::vector<std::vector<PairResult>> per_seed;
  /// Median over seeds of the fold-mean F1, indexed like cfg.modes.
  std::vector<double> median_f1;
};

BenchmarkResult run_benchmark(const BenchmarkConfig& cfg);

}  // namespace dafd
