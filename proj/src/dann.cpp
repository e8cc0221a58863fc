#include "dafd/dann.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "dafd/error.hpp"

namespace dafd {
namespace {

constexpr std::uint64_t kStreamInit = 1;
constexpr std::uint64_t kStreamBatches = 2;
constexpr std::uint64_t kStreamDropout = 3;
constexpr std::uint64_t kStreamSplit = 4;
constexpr std::size_t kPredictChunk = 256;

std::size_t uniform_index(std::size_t n, std::mt19937_64& rng) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

std::size_t draw_balanced(const SegmentPool& pool, std::mt19937_64& rng) {
  const bool pick_fall = std::bernoulli_distribution(0.5)(rng);
  const std::vector<std::size_t>* cls = pick_fall ? &pool.fall : &pool.adl;
  if (cls->empty()) cls = pick_fall ? &pool.adl : &pool.fall;
  return (*cls)[uniform_index(cls->size(), rng)];
}

std::vector<std::size_t> target_candidates(const SegmentPool& target, TrainMode mode) {
  if (mode == TrainMode::kDafdAdl) return target.adl;
  std::vector<std::size_t> all(target.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return all;
}

void require_pools(const SegmentPool& source, const SegmentPool& target, TrainMode mode) {
  const SegmentPool& labeled = mode == TrainMode::kTargetOnly ? target : source;
  if (labeled.labeled() == 0) {
    throw DataError(std::string("no labeled ") + (mode == TrainMode::kTargetOnly ? "target" : "source") +
                    " segments for mode " + std::string(to_string(mode)));
  }
  if (uses_domain_loss(mode) && target_candidates(target, mode).empty()) {
    throw DataError(mode == TrainMode::kDafdAdl ? "dafd_adl needs at least one target ADL segment"
                                                : "dafd needs a non-empty target pool");
  }
}

LossBreakdown mean_of(const std::vector<LossBreakdown>& xs) {
  LossBreakdown m;
  if (xs.empty()) return m;
  for (const LossBreakdown& x : xs) {
    m.loss_fall += x.loss_fall;
    m.loss_domain += x.loss_domain;
  }
  m.loss_fall /= static_cast<double>(xs.size());
  m.loss_domain /= static_cast<double>(xs.size());
  m.loss_total = m.loss_fall + m.loss_domain;
  return m;
}

std::string normalize_mode(std::string_view text) {
  std::string s;
  for (char c : text) {
    if (c == '-' || c == ' ') c = '_';
    s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return s;
}

}  // namespace

void validate(const Hyperparams& hp) {
  if (!(hp.dropout >= 0.0 && hp.dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
  if (!(hp.lr > 0.0) || !std::isfinite(hp.lr)) throw ConfigError("learning rate must be positive");
  if (!(hp.lambda >= 0.0) || !std::isfinite(hp.lambda)) throw ConfigError("lambda must be non-negative");
}

std::string_view to_string(TrainMode mode) {
  switch (mode) {
    case TrainMode::kSourceOnly: return "source_only";
    case TrainMode::kDafd: return "dafd";
    case TrainMode::kDafdAdl: return "dafd_adl";
    case TrainMode::kTargetOnly: return "target_only";
  }
  return "?";
}

std::string_view display_name(TrainMode mode) {
  switch (mode) {
    case TrainMode::kSourceOnly: return "Source-only";
    case TrainMode::kDafd: return "DAFD";
    case TrainMode::kDafdAdl: return "DAFD_adl";
    case TrainMode::kTargetOnly: return "Target-only";
  }
  return "?";
}

TrainMode parse_train_mode(std::string_view text) {
  const std::string s = normalize_mode(text);
  if (s == "source_only" || s == "sourceonly") return TrainMode::kSourceOnly;
  if (s == "dafd") return TrainMode::kDafd;
  if (s == "dafd_adl") return TrainMode::kDafdAdl;
  if (s == "target_only" || s == "targetonly") return TrainMode::kTargetOnly;
  throw ConfigError("unknown training mode '" + std::string(text) +
                    "' (expected source_only, dafd, dafd_adl or target_only)");
}

bool uses_domain_loss(TrainMode mode) { return mode == TrainMode::kDafd || mode == TrainMode::kDafdAdl; }

void validate(const TrainConfig& cfg) {
  if (cfg.batch_per_domain < 1) throw ConfigError("batch_per_domain must be >= 1");
  if (cfg.max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
  if (cfg.patience < 1) throw ConfigError("patience must be >= 1");
  if (!(cfg.val_fraction > 0.0 && cfg.val_fraction < 1.0)) throw ConfigError("val_fraction must lie in (0, 1)");
}

SegmentPool SegmentPool::build(std::vector<Segment> segments, Domain domain) {
  SegmentPool pool;
  pool.domain = domain;
  pool.segments = std::move(segments);
  for (std::size_t i = 0; i < pool.segments.size(); ++i) {
    const Segment& s = pool.segments[i];
    if (s.domain != domain) {
      throw DataError("segment " + s.trial_id + " is tagged " + std::string(to_string(s.domain)) +
                      " in a " + std::string(to_string(domain)) + " pool");
    }
    if (s.label == Label::kFall) pool.fall.push_back(i);
    if (s.label == Label::kAdl) pool.adl.push_back(i);
  }
  return pool;
}

std::vector<std::string> SegmentPool::subjects() const {
  std::set<std::string> ids;
  for (const Segment& s : segments) ids.insert(s.subject_id);
  return {ids.begin(), ids.end()};
}

SegmentPool SegmentPool::select_subjects(const std::vector<std::string>& ids, bool keep) const {
  const std::set<std::string> wanted(ids.begin(), ids.end());
  std::vector<Segment> out;
  for (const Segment& s : segments) {
    if ((wanted.count(s.subject_id) != 0) == keep) out.push_back(s);
  }
  return build(std::move(out), domain);
}

std::vector<Batch> make_epoch_batches(const SegmentPool& source, const SegmentPool& target,
                                      const TrainConfig& cfg, std::mt19937_64& rng) {
  validate(cfg);
  require_pools(source, target, cfg.mode);
  const bool target_labeled = cfg.mode == TrainMode::kTargetOnly;
  const SegmentPool& labeled = target_labeled ? target : source;
  const std::size_t majority = std::max(labeled.adl.size(), labeled.fall.size());
  const std::size_t per = static_cast<std::size_t>(cfg.batch_per_domain);
  const std::size_t n_batches = (majority + per - 1) / per;
  const std::vector<std::size_t> candidates =
      uses_domain_loss(cfg.mode) ? target_candidates(target, cfg.mode) : std::vector<std::size_t>{};

  std::vector<Batch> batches(n_batches);
  for (Batch& b : batches) {
    std::vector<std::size_t>& labeled_rows = target_labeled ? b.target : b.source;
    for (std::size_t i = 0; i < per; ++i) labeled_rows.push_back(draw_balanced(labeled, rng));
    if (uses_domain_loss(cfg.mode)) {
      for (std::size_t i = 0; i < per; ++i) b.target.push_back(candidates[uniform_index(candidates.size(), rng)]);
    }
  }
  return batches;
}

AssembledBatch assemble(const Batch& batch, const SegmentPool& source, const SegmentPool& target,
                        TrainMode mode) {
  AssembledBatch out;
  std::vector<const std::vector<double>*> rows;
  const auto add = [&](const Segment& s, int fall, int domain) {
    if (s.length != nn::kInputLength) throw DataError("segment " + s.trial_id + " is not 66 samples long");
    rows.push_back(&s.values);
    out.targets.fall.push_back(fall);
    if (uses_domain_loss(mode)) out.targets.domain.push_back(domain);
  };
  for (std::size_t i : batch.source) {
    const Segment& s = source.segments.at(i);
    add(s, s.label ? static_cast<int>(*s.label) : -1, 0);
  }
  for (std::size_t i : batch.target) {
    const Segment& s = target.segments.at(i);
    const int fall = mode == TrainMode::kTargetOnly && s.label ? static_cast<int>(*s.label) : -1;
    add(s, fall, 1);
  }
  out.input = nn::make_batch(rows);
  return out;
}

TrainState TrainState::init(std::uint64_t seed) {
  return {nn::ModelParams::init(seed), nn::AdamState::zeros()};
}

LossBreakdown train_step(TrainState& state, const AssembledBatch& batch, const Hyperparams& hp, TrainMode mode,
                         std::mt19937_64& dropout_rng, std::size_t batch_id) {
  validate(hp);
  try {
    const nn::ForwardResult fwd =
        nn::forward_pass(state.params, batch.input, hp.lambda, nn::Mode::kTrain, hp.dropout, dropout_rng);
    const nn::BackwardResult bwd = nn::backward_pass(state.params, fwd.cache, batch.targets);
    LossBreakdown loss{bwd.loss_fall, bwd.loss_domain, bwd.loss_fall + bwd.loss_domain};
    if (!std::isfinite(loss.loss_total)) throw NumericError("non-finite loss");
    nn::adam_step(state.params, bwd.grads, state.adam, nn::ParamGroup::kExtractor, hp.lr, kWeightDecay);
    nn::adam_step(state.params, bwd.grads, state.adam, nn::ParamGroup::kFallHead, hp.lr, kWeightDecay);
    if (uses_domain_loss(mode)) {
      nn::adam_step(state.params, bwd.grads, state.adam, nn::ParamGroup::kDomainHead, hp.lr, kWeightDecay);
    }
    nn::commit_running_stats(state.params, fwd.cache);
    return loss;
  } catch (const NumericError& e) {
    throw NumericError("batch " + std::to_string(batch_id) + ": " + e.what());
  }
}

EvalLoss evaluate_loss(const nn::ModelParams& params, const AssembledBatch& batch, TrainMode mode) {
  std::mt19937_64 unused(0);
  const nn::ForwardResult fwd = nn::forward_pass(params, batch.input, 0.0, nn::Mode::kEval, 0.0, unused);
  nn::LossTargets targets = batch.targets;
  if (!uses_domain_loss(mode)) targets.domain.clear();
  const auto [fall, domain] = nn::compute_losses(fwd.cache, targets);
  EvalLoss out;
  out.loss = {fall, domain, fall + domain};
  std::size_t n = 0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < targets.fall.size(); ++i) {
    if (targets.fall[i] < 0) continue;
    ++n;
    const int pred = fwd.fall_logits.at(i, 1) > fwd.fall_logits.at(i, 0) ? 1 : 0;
    if (pred == targets.fall[i]) ++correct;
  }
  out.fall_accuracy = n == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(n);
  return out;
}

std::vector<Label> predict(const nn::ModelParams& params, const std::vector<Segment>& segments) {
  std::vector<Label> out;
  out.reserve(segments.size());
  std::mt19937_64 unused(0);
  for (std::size_t begin = 0; begin < segments.size(); begin += kPredictChunk) {
    const std::size_t end = std::min(segments.size(), begin + kPredictChunk);
    std::vector<const std::vector<double>*> rows;
    for (std::size_t i = begin; i < end; ++i) rows.push_back(&segments[i].values);
    const nn::ForwardResult fwd =
        nn::forward_pass(params, nn::make_batch(rows), 0.0, nn::Mode::kEval, 0.0, unused);
    for (std::size_t i = 0; i < end - begin; ++i) {
      out.push_back(fwd.fall_logits.at(i, 1) > fwd.fall_logits.at(i, 0) ? Label::kFall : Label::kAdl);
    }
  }
  return out;
}

StopResult run_early_stopping(int max_epochs, int patience, const std::function<double(int)>& run_epoch,
                              const std::function<void(int)>& on_improve) {
  if (max_epochs < 1 || patience < 1) throw ConfigError("max_epochs and patience must be >= 1");
  StopResult r;
  int stale = 0;
  for (int epoch = 1; epoch <= max_epochs; ++epoch) {
    const double loss = run_epoch(epoch);
    r.stopped_epoch = epoch;
    if (r.best_epoch == 0 || loss < r.best_loss) {
      r.best_epoch = epoch;
      r.best_loss = loss;
      stale = 0;
      if (on_improve) on_improve(epoch);
    } else if (++stale >= patience) {
      break;
    }
  }
  return r;
}

FitResult fit(const SegmentPool& source, const SegmentPool& target, const Hyperparams& hp,
              const TrainConfig& cfg) {
  validate(cfg);
  validate(hp);
  require_pools(source, target, cfg.mode);
  const bool target_labeled = cfg.mode == TrainMode::kTargetOnly;
  const SegmentPool& labeled = target_labeled ? target : source;

  std::vector<std::string> subjects = labeled.subjects();
  if (subjects.size() < 2) throw DataError("need at least 2 labeled subjects to split off validation data");
  std::mt19937_64 split_rng(derive_seed(cfg.seed, kStreamSplit));
  std::shuffle(subjects.begin(), subjects.end(), split_rng);
  const auto n_val = static_cast<std::size_t>(std::clamp<long long>(
      std::llround(cfg.val_fraction * static_cast<double>(subjects.size())), 1,
      static_cast<long long>(subjects.size()) - 1));
  const std::vector<std::string> val_subjects(subjects.begin(), subjects.begin() + static_cast<long>(n_val));
  const SegmentPool val_labeled = labeled.select_subjects(val_subjects, true);
  const SegmentPool train_labeled = labeled.select_subjects(val_subjects, false);
  if (train_labeled.labeled() == 0) throw DataError("validation split left no labeled training segments");

  const SegmentPool empty = SegmentPool::build({}, Domain::kSource);
  const SegmentPool& train_source = target_labeled ? empty : train_labeled;
  const SegmentPool& train_target = target_labeled ? train_labeled : target;

  AssembledBatch val;
  {
    Batch vb;
    std::vector<std::size_t> rows(val_labeled.size());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    (target_labeled ? vb.target : vb.source) = rows;
    if (uses_domain_loss(cfg.mode)) {
      std::vector<std::size_t> cand = target_candidates(target, cfg.mode);
      std::shuffle(cand.begin(), cand.end(), split_rng);
      cand.resize(std::min(cand.size(), val_labeled.size()));
      std::sort(cand.begin(), cand.end());
      vb.target = cand;
    }
    val = target_labeled ? assemble(vb, empty, val_labeled, cfg.mode)
                         : assemble(vb, val_labeled, target, cfg.mode);
  }

  TrainState state = TrainState::init(derive_seed(cfg.seed, kStreamInit));
  std::mt19937_64 batch_rng(derive_seed(cfg.seed, kStreamBatches));
  std::mt19937_64 dropout_rng(derive_seed(cfg.seed, kStreamDropout));

  FitResult result;
  const auto run_epoch = [&](int epoch) {
    const std::vector<Batch> batches = make_epoch_batches(train_source, train_target, cfg, batch_rng);
    std::vector<LossBreakdown> losses;
    losses.reserve(batches.size());
    for (std::size_t i = 0; i < batches.size(); ++i) {
      const AssembledBatch ab = assemble(batches[i], train_source, train_target, cfg.mode);
      losses.push_back(train_step(state, ab, hp, cfg.mode, dropout_rng, i));
    }
    const EvalLoss v = evaluate_loss(state.params, val, cfg.mode);
    result.history.epochs.push_back({epoch, mean_of(losses), v.loss, v.fall_accuracy});
    return v.loss.loss_total;
  };
  const StopResult stop =
      run_early_stopping(cfg.max_epochs, cfg.patience, run_epoch, [&](int) { result.best = state; });
  result.history.best_epoch = stop.best_epoch;
  result.history.stopped_epoch = stop.stopped_epoch;
  result.best_val_loss = stop.best_loss;
  return result;
}

std::vector<Hyperparams> grid_tuples() {
  std::vector<Hyperparams> out;
  for (double d : kGridDropout) {
    for (double lr : kGridLearningRate) {
      for (double lambda : kGridLambda) out.push_back({d, lr, lambda});
    }
  }
  return out;
}

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, jobs)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::exception_ptr first;
  std::size_t first_index = n;
  const auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (i < first_index) {
          first_index = i;
          first = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  for (std::thread& t : pool) t.join();
  if (first) std::rethrow_exception(first);
}

GridResult grid_search(const SegmentPool& source, const SegmentPool& target, const TrainConfig& cfg, int jobs,
                       const std::vector<Hyperparams>& tuples) {
  if (tuples.empty()) throw ConfigError("grid_search: no hyperparameter tuples");
  std::vector<FitResult> fits(tuples.size());
  parallel_for(tuples.size(), jobs, [&](std::size_t i) {
    TrainConfig c = cfg;
    c.seed = derive_seed(cfg.seed, i);
    fits[i] = fit(source, target, tuples[i], c);
  });
  GridResult g;
  for (std::size_t i = 0; i < tuples.size(); ++i) {
    g.entries.push_back({tuples[i], fits[i].best_val_loss, fits[i].history.best_epoch,
                         fits[i].history.stopped_epoch});
    if (fits[i].best_val_loss < g.entries[g.best_index].best_val_loss) g.best_index = i;
  }
  g.best_fit = std::move(fits[g.best_index]);
  return g;
}

std::string history_csv(const TrainHistory& history) {
  std::ostringstream out;
  out << "epoch,train_loss_fall,train_loss_domain,train_loss_total,val_loss_fall,val_loss_domain,"
         "val_loss_total,val_fall_accuracy,best\n";
  for (const EpochRecord& e : history.epochs) {
    out << e.epoch << ',' << format_double(e.train.loss_fall) << ',' << format_double(e.train.loss_domain) << ','
        << format_double(e.train.loss_total) << ',' << format_double(e.val.loss_fall) << ','
        << format_double(e.val.loss_domain) << ',' << format_double(e.val.loss_total) << ','
        << format_double(e.val_fall_accuracy) << ',' << (e.epoch == history.best_epoch ? 1 : 0) << '\n';
  }
  return out.str();
}

std::string grid_csv(const GridResult& grid) {
  std::ostringstream out;
  out << "index,dropout,lr,lambda,best_val_loss,best_epoch,stopped_epoch,selected\n";
  for (std::size_t i = 0; i < grid.entries.size(); ++i) {
    const GridEntry& e = grid.entries[i];
    out << i << ',' << format_double(e.hp.dropout) << ',' << format_double(e.hp.lr) << ','
        << format_double(e.hp.lambda) << ',' << format_double(e.best_val_loss) << ',' << e.best_epoch << ','
        << e.stopped_epoch << ',' << (i == grid.best_index ? 1 : 0) << '\n';
  }
  return out.str();
}

KeyValueConfig to_config(const TrainConfig& cfg, const Hyperparams& hp) {
  KeyValueConfig kv;
  kv.set("mode", std::string(to_string(cfg.mode)));
  kv.set("batch_per_domain", std::to_string(cfg.batch_per_domain));
  kv.set("max_epochs", std::to_string(cfg.max_epochs));
  kv.set("patience", std::to_string(cfg.patience));
  kv.set("seed", std::to_string(cfg.seed));
  kv.set("val_fraction", format_double(cfg.val_fraction));
  kv.set("dropout", format_double(hp.dropout));
  kv.set("lr", format_double(hp.lr));
  kv.set("lambda", format_double(hp.lambda));
  return kv;
}

void apply_config(const KeyValueConfig& kv, TrainConfig& cfg, Hyperparams& hp) {
  if (auto m = kv.get("mode")) cfg.mode = parse_train_mode(*m);
  cfg.batch_per_domain = static_cast<int>(kv.get_int("batch_per_domain", cfg.batch_per_domain));
  cfg.max_epochs = static_cast<int>(kv.get_int("max_epochs", cfg.max_epochs));
  cfg.patience = static_cast<int>(kv.get_int("patience", cfg.patience));
  if (auto s = kv.get("seed")) {
    const auto v = parse_uint(*s);
    if (!v) throw ConfigError("seed must be a non-negative integer: " + *s);
    cfg.seed = *v;
  }
  cfg.val_fraction = kv.get_double("val_fraction", cfg.val_fraction);
  hp.dropout = kv.get_double("dropout", hp.dropout);
  hp.lr = kv.get_double("lr", hp.lr);
  hp.lambda = kv.get_double("lambda", hp.lambda);
  validate(cfg);
  validate(hp);
}

}  // namespace dafd
