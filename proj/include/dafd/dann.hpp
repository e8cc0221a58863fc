#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "dafd/hyperparams.hpp"
#include "dafd/nn/adam.hpp"
#include "dafd/nn/model.hpp"
#include "dafd/signal.hpp"
#include "dafd/text_io.hpp"

namespace dafd {

enum class TrainMode { kSourceOnly, kDafd, kDafdAdl, kTargetOnly };

/// "source_only", "dafd", "dafd_adl", "target_only".
std::string_view to_string(TrainMode mode);
/// Also accepts the display names ("Source-only", "DAFD_adl", ...), any case.
TrainMode parse_train_mode(std::string_view text);
/// "Source-only", "DAFD_adl", "DAFD", "Target-only".
std::string_view display_name(TrainMode mode);

inline constexpr std::array<TrainMode, 4> kAllModes{TrainMode::kSourceOnly, TrainMode::kDafdAdl,
                                                    TrainMode::kDafd, TrainMode::kTargetOnly};

bool uses_domain_loss(TrainMode mode);

struct TrainConfig {
  TrainMode mode = TrainMode::kDafd;
  int batch_per_domain = 4;
  int max_epochs = 200;
  int patience = 10;
  std::uint64_t seed = 0;
  double val_fraction = 0.2;
};

/// Throws ConfigError on batch_per_domain < 1, max_epochs < 1, patience < 1
/// or val_fraction outside (0, 1).
void validate(const TrainConfig& cfg);

/// Segments of one domain with class index lists. Unlabeled segments are kept
/// but appear in neither class list.
struct SegmentPool {
  std::vector<Segment> segments;
  Domain domain = Domain::kSource;
  std::vector<std::size_t> adl;
  std::vector<std::size_t> fall;

  /// Throws DataError when a segment's domain differs from `domain`.
  static SegmentPool build(std::vector<Segment> segments, Domain domain);

  bool empty() const { return segments.empty(); }
  std::size_t size() const { return segments.size(); }
  std::size_t labeled() const { return adl.size() + fall.size(); }
  /// Sorted distinct subject ids.
  std::vector<std::string> subjects() const;
  /// Segments whose subject is (or is not) in `subjects`.
  SegmentPool select_subjects(const std::vector<std::string>& subjects, bool keep) const;
};

/// Indices into the source and target pools.
struct Batch {
  std::vector<std::size_t> source;
  std::vector<std::size_t> target;
};

/// One epoch of batches. The labeled pool (target for TargetOnly, source
/// otherwise) is drawn with replacement, each draw picking Fall or ADL with
/// probability 1/2 and then a uniform member of that class; the epoch has
/// ceil(majority count / batch_per_domain) batches. DAFD modes add
/// batch_per_domain target draws per batch (uniform with replacement; ADL
/// members only for DAFD_adl).
std::vector<Batch> make_epoch_batches(const SegmentPool& source, const SegmentPool& target,
                                      const TrainConfig& cfg, std::mt19937_64& rng);

/// Input tensor and loss targets of a batch. Target rows are never given a
/// fall label except in TargetOnly mode; domain targets exist only in the DAFD
/// modes.
struct AssembledBatch {
  nn::Tensor input;
  nn::LossTargets targets;
};
AssembledBatch assemble(const Batch& batch, const SegmentPool& source, const SegmentPool& target,
                        TrainMode mode);

struct LossBreakdown {
  double loss_fall = 0.0;
  double loss_domain = 0.0;
  double loss_total = 0.0;
};

struct TrainState {
  nn::ModelParams params;
  nn::AdamState adam;

  static TrainState init(std::uint64_t seed);
};

/// Forward, backward and one Adam step per participating parameter group
/// (the domain head sits out in SourceOnly/TargetOnly). Returns the pre-update
/// losses. Throws NumericError on a non-finite loss or gradient; `batch_id`
/// is included in the message.
LossBreakdown train_step(TrainState& state, const AssembledBatch& batch, const Hyperparams& hp, TrainMode mode,
                         std::mt19937_64& dropout_rng, std::size_t batch_id = 0);

/// Eval-mode losses over a whole set (no dropout, running statistics).
struct EvalLoss {
  LossBreakdown loss;
  double fall_accuracy = 0.0;
};
EvalLoss evaluate_loss(const nn::ModelParams& params, const AssembledBatch& batch, TrainMode mode);

/// Eval-mode fall-head decisions.
std::vector<Label> predict(const nn::ModelParams& params, const std::vector<Segment>& segments);

struct EpochRecord {
  int epoch = 0;
  LossBreakdown train;
  LossBreakdown val;
  double val_fall_accuracy = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;
  int stopped_epoch = 0;
};

struct StopResult {
  int best_epoch = 0;
  int stopped_epoch = 0;
  double best_loss = 0.0;
};

/// Calls run_epoch(1), run_epoch(2), ... until max_epochs or until `patience`
/// consecutive epochs fail to strictly improve on the best validation loss.
/// on_improve(epoch) fires whenever a new best is recorded.
StopResult run_early_stopping(int max_epochs, int patience, const std::function<double(int)>& run_epoch,
                              const std::function<void(int)>& on_improve = {});

struct FitResult {
  TrainState best;
  TrainHistory history;
  double best_val_loss = 0.0;
};

/// Subject-disjoint validation split of the labeled pool (round(val_fraction *
/// subjects), at least 1, leaving at least 1), plus a seeded target slice of
/// matching size for the domain term in DAFD modes. Trains with early
/// stopping and returns the state of the best epoch.
/// Throws DataError when the labeled pool has fewer than 2 subjects or a
/// required pool is empty.
FitResult fit(const SegmentPool& source, const SegmentPool& target, const Hyperparams& hp,
              const TrainConfig& cfg);

/// The 27 grid tuples, dropout-major then learning rate then lambda.
std::vector<Hyperparams> grid_tuples();

struct GridEntry {
  Hyperparams hp;
  double best_val_loss = 0.0;
  int best_epoch = 0;
  int stopped_epoch = 0;
};

struct GridResult {
  std::vector<GridEntry> entries;
  std::size_t best_index = 0;
  FitResult best_fit;
};

/// One fit per tuple with seed derive_seed(cfg.seed, tuple index), run on up
/// to `jobs` threads. Ties in validation loss go to the lower index.
GridResult grid_search(const SegmentPool& source, const SegmentPool& target, const TrainConfig& cfg,
                       int jobs = 1, const std::vector<Hyperparams>& tuples = grid_tuples());

/// Runs fn(0..n-1) on up to `jobs` threads; the first exception is rethrown
/// after all workers finish.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

std::string history_csv(const TrainHistory& history);
std::string grid_csv(const GridResult& grid);

/// key = value view of TrainConfig and Hyperparams.
KeyValueConfig to_config(const TrainConfig& cfg, const Hyperparams& hp);
/// Reads the keys written by to_config, falling back to the given values.
void apply_config(const KeyValueConfig& kv, TrainConfig& cfg, Hyperparams& hp);

}  // namespace dafd
