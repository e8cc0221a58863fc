#include "dafd/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <iostream>
#include <numbers>
#include <random>
#include <set>

#include "dafd/dann.hpp"
#include "dafd/error.hpp"
#include "dafd/eval.hpp"
#include "dafd/ingest.hpp"
#include "dafd/nn/checkpoint.hpp"
#include "dafd/nn/gradcheck.hpp"
#include "dafd/signal.hpp"
#include "dafd/text_io.hpp"

namespace dafd::cli {
namespace {

namespace fs = std::filesystem;

constexpr double kGradCheckTolerance = 1e-4;

struct Options {
  std::string config;
  std::string data;
  std::string out;
  std::string mode;
  std::string scenario;
  std::string pair;
  std::string mapping;
  std::string dataset;
  std::string position;
  std::string checkpoint;
  std::uint64_t seed = 0;
  int jobs = 1;
  int epochs = 0;
  int patience = 0;
  int seeds = 5;
  double lr = 0.0;
  double lambda = 0.0;
  double dropout = 0.0;
  bool grid = false;
};

// One record per line: space-separated key=value fields.
class Record {
 public:
  Record& add(const std::string& key, const std::string& value) {
    line_ += (line_.empty() ? "" : " ") + key + "=" + value;
    return *this;
  }
  Record& add(const std::string& key, double value) { return add(key, format_double(value)); }
  Record& add(const std::string& key, std::int64_t value) { return add(key, std::to_string(value)); }
  Record& add(const std::string& key, int value) { return add(key, std::to_string(value)); }
  Record& add(const std::string& key, std::size_t value) { return add(key, std::to_string(value)); }
  void emit(std::ostream& out) const { out << line_ << '\n'; }

 private:
  std::string line_;
};

bool given(const CLI::App& app, const std::string& flag) {
  const CLI::Option* opt = app.get_option_no_throw(flag);
  return opt != nullptr && opt->count() > 0;
}

// Defaults < config file < flags.
KeyValueConfig effective_config(const CLI::App& app, const Options& o, const std::string& command) {
  const BenchmarkConfig bench;
  KeyValueConfig kv = command == "bench" ? to_config(bench.train, bench.hp) : to_config(TrainConfig{}, Hyperparams{});
  kv.set("jobs", "1");
  if (!o.config.empty()) {
    static const std::set<std::string> extra = {
        "data", "out", "scenario", "pair", "mapping", "dataset", "position", "checkpoint", "hp_search", "seeds",
        "n_subjects", "trials_per_class", "rate_hz", "duration_s", "noise_sigma", "rotation_deg", "gain_x",
        "gain_y", "gain_z", "offset_x", "offset_y", "offset_z", "target_rate_hz", "source_position",
        "target_position"};
    const KeyValueConfig file = KeyValueConfig::load(o.config);
    for (const auto& [k, v] : file.values()) {
      if (!kv.contains(k) && !extra.count(k)) throw ConfigError(o.config + ": unknown key '" + k + "'");
      kv.set(k, v);
    }
  }
  if (given(app, "--seed")) kv.set("seed", std::to_string(o.seed));
  if (given(app, "--jobs")) kv.set("jobs", std::to_string(o.jobs));
  if (given(app, "--epochs")) kv.set("max_epochs", std::to_string(o.epochs));
  if (given(app, "--patience")) kv.set("patience", std::to_string(o.patience));
  if (given(app, "--lr")) kv.set("lr", format_double(o.lr));
  if (given(app, "--lambda")) kv.set("lambda", format_double(o.lambda));
  if (given(app, "--dropout")) kv.set("dropout", format_double(o.dropout));
  if (given(app, "--mode")) kv.set("mode", o.mode);
  if (given(app, "--seeds")) kv.set("seeds", std::to_string(o.seeds));
  for (const auto& [flag, value] : std::vector<std::pair<std::string, std::string>>{
           {"data", o.data},
           {"out", o.out},
           {"scenario", o.scenario},
           {"pair", o.pair},
           {"mapping", o.mapping},
           {"dataset", o.dataset},
           {"position", o.position},
           {"checkpoint", o.checkpoint}}) {
    if (given(app, "--" + flag)) kv.set(flag, value);
  }
  if (given(app, "--grid")) kv.set("hp_search", o.grid ? "grid" : "fixed");
  kv.set("command", command);
  kv.set("version", kVersion);
  return kv;
}

int jobs_of(const KeyValueConfig& kv) {
  const auto jobs = kv.get_int("jobs", 1);
  if (jobs < 1) throw ConfigError("--jobs must be >= 1");
  return static_cast<int>(jobs);
}

std::string require(const KeyValueConfig& kv, const std::string& key) {
  const auto v = kv.get(key);
  if (!v || v->empty()) throw ConfigError("missing required --" + key);
  return *v;
}

fs::path out_dir(const KeyValueConfig& kv) {
  const fs::path dir = require(kv, "out");
  fs::create_directories(dir);
  return dir;
}

void write_provenance(const fs::path& dir, const KeyValueConfig& kv) {
  write_file(dir / "provenance.txt", kv.to_text());
}

fs::path manifest_path(const std::string& data) {
  const fs::path p = data;
  if (fs::is_directory(p)) return p / "manifest.csv";
  return p;
}

std::vector<Segment> load_segments(const std::string& data, std::ostream& out) {
  const std::vector<TrialRecord> trials = load_canonical(manifest_path(data));
  std::vector<Exclusion> excluded;
  std::vector<Segment> segments = preprocess_all(trials, WindowConfig{}, {}, &excluded);
  for (const Exclusion& e : excluded) Record().add("excluded", e.trial_id).add("reason", "\"" + e.reason + "\"").emit(out);
  Record().add("trials", trials.size()).add("segments", segments.size()).add("excluded", excluded.size()).emit(out);
  return segments;
}

SynthSpec synth_spec_from(const KeyValueConfig& kv) {
  SynthSpec s;
  s.domain_shift = benchmark_shift();
  s.n_subjects = static_cast<int>(kv.get_int("n_subjects", s.n_subjects));
  s.trials_per_class_per_subject =
      static_cast<int>(kv.get_int("trials_per_class", s.trials_per_class_per_subject));
  s.rate_hz = kv.get_double("rate_hz", s.rate_hz);
  s.duration_s = kv.get_double("duration_s", s.duration_s);
  s.noise_sigma = kv.get_double("noise_sigma", s.noise_sigma);
  s.domain_shift.rotation_rad =
      kv.get_double("rotation_deg", s.domain_shift.rotation_rad * 180.0 / std::numbers::pi) * std::numbers::pi /
      180.0;
  const char* axes[] = {"x", "y", "z"};
  for (std::size_t i = 0; i < 3; ++i) {
    s.domain_shift.gain[i] = kv.get_double(std::string("gain_") + axes[i], s.domain_shift.gain[i]);
    s.domain_shift.offset[i] = kv.get_double(std::string("offset_") + axes[i], s.domain_shift.offset[i]);
  }
  if (kv.contains("target_rate_hz")) s.domain_shift.rate_override_hz = kv.get_double("target_rate_hz", 0.0);
  if (auto seed = kv.get("seed")) {
    const auto v = parse_uint(*seed);
    if (!v) throw ConfigError("seed must be a non-negative integer");
    s.seed = *v;
  }
  s.dataset_id = kv.get_string("dataset", s.dataset_id);
  s.source_position = kv.get_string("source_position", s.source_position);
  s.target_position = kv.get_string("target_position", s.target_position);
  validate_synth_spec(s);
  return s;
}

void record_synth(KeyValueConfig& kv, const SynthSpec& s) {
  kv.set("n_subjects", std::to_string(s.n_subjects));
  kv.set("trials_per_class", std::to_string(s.trials_per_class_per_subject));
  kv.set("rate_hz", format_double(s.rate_hz));
  kv.set("duration_s", format_double(s.duration_s));
  kv.set("noise_sigma", format_double(s.noise_sigma));
  kv.set("rotation_deg", format_double(s.domain_shift.rotation_rad * 180.0 / std::numbers::pi));
  const char* axes[] = {"x", "y", "z"};
  for (std::size_t i = 0; i < 3; ++i) {
    kv.set(std::string("gain_") + axes[i], format_double(s.domain_shift.gain[i]));
    kv.set(std::string("offset_") + axes[i], format_double(s.domain_shift.offset[i]));
  }
  kv.set("dataset", s.dataset_id);
  kv.set("source_position", s.source_position);
  kv.set("target_position", s.target_position);
}

// ---- commands ----

int cmd_synth(KeyValueConfig kv, std::ostream& out) {
  const SynthSpec spec = synth_spec_from(kv);
  record_synth(kv, spec);
  const fs::path dir = out_dir(kv);
  const std::vector<TrialRecord> trials = synth_corpus(spec);
  const fs::path manifest = write_canonical(trials, dir);
  write_provenance(dir, kv);
  Record().add("trials", trials.size()).add("subjects", spec.n_subjects).add("manifest", manifest.string()).emit(out);
  return kExitOk;
}

int cmd_adapt(const KeyValueConfig& kv, std::ostream& out) {
  const ColumnMapping mapping = load_column_mapping(require(kv, "mapping"));
  const std::vector<TrialRecord> trials =
      adapt_dataset(require(kv, "data"), mapping, require(kv, "dataset"), require(kv, "position"));
  const fs::path dir = out_dir(kv);
  const fs::path manifest = write_canonical(trials, dir);
  write_provenance(dir, kv);
  Record().add("trials", trials.size()).add("manifest", manifest.string()).emit(out);
  return kExitOk;
}

int cmd_preprocess(const KeyValueConfig& kv, std::ostream& out) {
  std::vector<Segment> segments = load_segments(require(kv, "data"), out);
  if (auto p = kv.get("pair")) {
    const PairSpec pair = parse_pair(*p);
    const PairData d = select_pair(segments, pair);
    segments = d.source.segments;
    segments.insert(segments.end(), d.target.segments.begin(), d.target.segments.end());
  }
  const fs::path dir = out_dir(kv);
  write_file(dir / "segments.csv", segment_dump_csv(segments));
  write_provenance(dir, kv);
  Record().add("segments", segments.size()).add("dump", (dir / "segments.csv").string()).emit(out);
  return kExitOk;
}

struct TrainSetup {
  TrainConfig cfg;
  Hyperparams hp;
  PairSpec pair;
  PairData data;
};

TrainSetup train_setup(const KeyValueConfig& kv, std::ostream& out) {
  TrainSetup s;
  apply_config(kv, s.cfg, s.hp);
  s.pair = parse_pair(require(kv, "pair"));
  s.data = select_pair(load_segments(require(kv, "data"), out), s.pair);
  return s;
}

void emit_history(const TrainHistory& h, std::ostream& out) {
  for (const EpochRecord& e : h.epochs) {
    Record()
        .add("epoch", e.epoch)
        .add("train_loss_total", e.train.loss_total)
        .add("val_loss_fall", e.val.loss_fall)
        .add("val_loss_domain", e.val.loss_domain)
        .add("val_loss_total", e.val.loss_total)
        .emit(out);
  }
}

int cmd_train(const KeyValueConfig& kv, std::ostream& out) {
  const TrainSetup s = train_setup(kv, out);
  const FitResult fit_result = fit(s.data.source, s.data.target, s.hp, s.cfg);
  const fs::path dir = out_dir(kv);
  nn::save_checkpoint({fit_result.best.params, fit_result.best.adam, s.hp}, dir / "checkpoint.txt");
  write_file(dir / "history.csv", history_csv(fit_result.history));
  write_provenance(dir, kv);
  emit_history(fit_result.history, out);
  Record()
      .add("pair", s.pair.id())
      .add("mode", std::string(to_string(s.cfg.mode)))
      .add("best_epoch", fit_result.history.best_epoch)
      .add("stopped_epoch", fit_result.history.stopped_epoch)
      .add("best_val_loss", fit_result.best_val_loss)
      .add("checkpoint", (dir / "checkpoint.txt").string())
      .emit(out);
  return kExitOk;
}

int cmd_grid(const KeyValueConfig& kv, std::ostream& out) {
  const TrainSetup s = train_setup(kv, out);
  const GridResult g = grid_search(s.data.source, s.data.target, s.cfg, jobs_of(kv));
  const fs::path dir = out_dir(kv);
  const Hyperparams best = g.entries[g.best_index].hp;
  nn::save_checkpoint({g.best_fit.best.params, g.best_fit.best.adam, best}, dir / "checkpoint.txt");
  write_file(dir / "history.csv", history_csv(g.best_fit.history));
  write_file(dir / "grid.csv", grid_csv(g));
  write_provenance(dir, kv);
  for (std::size_t i = 0; i < g.entries.size(); ++i) {
    const GridEntry& e = g.entries[i];
    Record()
        .add("tuple", i)
        .add("dropout", e.hp.dropout)
        .add("lr", e.hp.lr)
        .add("lambda", e.hp.lambda)
        .add("best_val_loss", e.best_val_loss)
        .add("best_epoch", e.best_epoch)
        .emit(out);
  }
  Record()
      .add("selected", g.best_index)
      .add("dropout", best.dropout)
      .add("lr", best.lr)
      .add("lambda", best.lambda)
      .add("grid", (dir / "grid.csv").string())
      .emit(out);
  return kExitOk;
}

void emit_results(const std::vector<PairResult>& results, std::ostream& out) {
  for (const PairResult& pr : results) {
    Record()
        .add("pair", pr.pair.id())
        .add("mode", std::string(to_string(pr.mode)))
        .add("sen", pr.mean.sen)
        .add("spe", pr.mean.spe)
        .add("pre", pr.mean.pre)
        .add("f1", pr.mean.f1)
        .emit(out);
  }
}

EvalConfig eval_config(const KeyValueConfig& kv) {
  EvalConfig ec;
  Hyperparams hp;
  KeyValueConfig train_kv = kv;
  train_kv.set("mode", std::string(to_string(TrainMode::kDafd)));
  apply_config(train_kv, ec.train, hp);
  const std::string search = kv.get_string("hp_search", "fixed");
  if (search == "fixed") {
    ec.hp = hp;
  } else if (search != "grid") {
    throw ConfigError("hp_search must be 'fixed' or 'grid'");
  }
  if (kv.contains("mode") && kv.get_string("mode", "") != "all") {
    ec.modes = {parse_train_mode(kv.get_string("mode", ""))};
  }
  ec.jobs = jobs_of(kv);
  return ec;
}

int cmd_evalpairs(KeyValueConfig kv, const CLI::App& app, std::ostream& out) {
  if (!given(app, "--mode")) kv.set("mode", "all");
  const EvalConfig ec = eval_config(kv);
  std::vector<PairSpec> pairs;
  if (auto p = kv.get("pair")) {
    pairs.push_back(parse_pair(*p));
  } else {
    pairs = enumerate_pairs(parse_scenario(require(kv, "scenario")), kv.get_string("dataset", ""));
  }
  const std::vector<Segment> segments = load_segments(require(kv, "data"), out);
  const fs::path dir = out_dir(kv);
  std::vector<PairResult> all;
  for (const PairSpec& pair : pairs) {
    const std::vector<PairResult> r = run_pair(pair, select_pair(segments, pair), ec);
    emit_results(r, out);
    all.insert(all.end(), r.begin(), r.end());
  }
  write_file(dir / "results.csv", results_csv(all));
  write_provenance(dir, kv);
  Record().add("pairs", pairs.size()).add("results", (dir / "results.csv").string()).emit(out);
  return kExitOk;
}

int cmd_report(const KeyValueConfig& kv, std::ostream& out) {
  fs::path src = require(kv, "data");
  if (fs::is_directory(src)) src /= "results.csv";
  const Report report = build_report(parse_results_csv(read_file(src)));
  const fs::path dir = out_dir(kv);
  write_file(dir / "report.txt", report.text);
  write_file(dir / "report.csv", report.csv);
  write_provenance(dir, kv);
  out << report.text;
  return kExitOk;
}

int cmd_export_features(const KeyValueConfig& kv, std::ostream& out) {
  const nn::Checkpoint ckpt = nn::load_checkpoint(require(kv, "checkpoint"));
  const PairData d = select_pair(load_segments(require(kv, "data"), out), parse_pair(require(kv, "pair")));
  std::vector<Segment> segments = d.source.segments;
  segments.insert(segments.end(), d.target.segments.begin(), d.target.segments.end());
  const fs::path dir = out_dir(kv);
  const std::size_t rows = export_features(ckpt.params, segments, dir / "features.csv");
  write_provenance(dir, kv);
  Record().add("rows", rows).add("features", (dir / "features.csv").string()).emit(out);
  return kExitOk;
}

int cmd_gradcheck(const KeyValueConfig& kv, const CLI::App& app, std::ostream& out) {
  const auto seed = parse_uint(kv.get_string("seed", "0"));
  if (!seed) throw ConfigError("seed must be a non-negative integer");
  std::vector<double> lambdas(kGridLambda.begin(), kGridLambda.end());
  if (given(app, "--lambda")) lambdas = {kv.get_double("lambda", 1.0)};
  const nn::ModelParams params = nn::ModelParams::init(derive_seed(*seed, 0));
  std::mt19937_64 rng(derive_seed(*seed, 1));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  nn::Tensor batch({4, nn::kInputChannels, nn::kInputLength});
  for (double& v : batch.values) v = unit(rng);
  double worst = 0.0;
  for (double lambda : lambdas) {
    const nn::GradCheckResult r = nn::grad_check(params, batch, nn::default_check_targets(4), lambda);
    worst = std::max(worst, r.max_rel_error);
    Record()
        .add("lambda", lambda)
        .add("max_rel_error", r.max_rel_error)
        .add("worst_param", r.worst_param + "[" + std::to_string(r.worst_index) + "]")
        .add("checked", r.checked)
        .add("skipped", r.skipped)
        .emit(out);
  }
  const bool pass = worst < kGradCheckTolerance;
  Record().add("max_rel_error", worst).add("tolerance", kGradCheckTolerance).add("pass", pass ? "1" : "0").emit(out);
  return pass ? kExitOk : kExitFailure;
}

int cmd_pairs(const KeyValueConfig& kv, std::ostream& out) {
  const Scenario scenario = parse_scenario(require(kv, "scenario"));
  const std::vector<PairSpec> pairs = enumerate_pairs(scenario, kv.get_string("dataset", ""));
  for (const PairSpec& p : pairs) {
    Record().add("scenario", std::string(to_string(p.scenario))).add("pair", p.id()).emit(out);
  }
  Record().add("count", pairs.size()).emit(out);
  return kExitOk;
}

int cmd_bench(const KeyValueConfig& kv, std::ostream& out) {
  BenchmarkConfig bc;
  apply_config(kv, bc.train, bc.hp);
  bc.spec = synth_spec_from(kv);
  const auto n = kv.get_int("seeds", 5);
  if (n < 1) throw ConfigError("--seeds must be >= 1");
  bc.seeds.clear();
  for (std::int64_t i = 0; i < n; ++i) bc.seeds.push_back(bc.train.seed + static_cast<std::uint64_t>(i));
  bc.jobs = jobs_of(kv);
  const BenchmarkResult r = run_benchmark(bc);
  const fs::path dir = out_dir(kv);
  std::string summary = "seed,mode,f1,sen,spe,pre\n";
  for (std::size_t s = 0; s < r.per_seed.size(); ++s) {
    for (const PairResult& pr : r.per_seed[s]) {
      summary += std::to_string(bc.seeds[s]) + "," + std::string(to_string(pr.mode)) + "," +
                 format_double(pr.mean.f1) + "," + format_double(pr.mean.sen) + "," + format_double(pr.mean.spe) +
                 "," + format_double(pr.mean.pre) + "\n";
      Record()
          .add("seed", std::to_string(bc.seeds[s]))
          .add("mode", std::string(to_string(pr.mode)))
          .add("f1", pr.mean.f1)
          .emit(out);
    }
    write_file(dir / ("results_" + std::to_string(s) + ".csv"), results_csv(r.per_seed[s]));
  }
  write_file(dir / "benchmark.csv", summary);
  KeyValueConfig full = kv;
  record_synth(full, bc.spec);
  write_provenance(dir, full);
  for (std::size_t m = 0; m < bc.modes.size(); ++m) {
    Record().add("median_f1", r.median_f1[m]).add("mode", std::string(to_string(bc.modes[m]))).emit(out);
  }
  return kExitOk;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Domain-adaptive fall detection: data preparation, training and evaluation", "dafd"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  Options o;
  const auto common = [&o](CLI::App* sub) {
    sub->add_option("--config", o.config, "key = value configuration file");
    sub->add_option("--seed", o.seed, "master seed");
  };
  const auto output = [&o](CLI::App* sub) { sub->add_option("--out", o.out, "output directory"); };
  const auto training = [&o](CLI::App* sub) {
    sub->add_option("--data", o.data, "canonical corpus directory or manifest");
    sub->add_option("--pair", o.pair, "source:target as dataset.POS:dataset.POS");
    sub->add_option("--mode", o.mode, "source_only | dafd | dafd_adl | target_only");
    sub->add_option("--epochs", o.epochs, "maximum epochs");
    sub->add_option("--patience", o.patience, "early-stopping patience");
    sub->add_option("--lr", o.lr, "learning rate");
    sub->add_option("--lambda", o.lambda, "domain regularization parameter");
    sub->add_option("--dropout", o.dropout, "dropout rate");
    sub->add_option("--jobs", o.jobs, "parallel jobs");
  };

  CLI::App* synth = app.add_subcommand("synth", "generate the synthetic two-domain corpus");
  common(synth);
  output(synth);
  CLI::App* adapt = app.add_subcommand("adapt", "convert a raw dataset export to the canonical format");
  common(adapt);
  output(adapt);
  adapt->add_option("--data", o.data, "raw export directory");
  adapt->add_option("--mapping", o.mapping, "column-mapping file");
  adapt->add_option("--dataset", o.dataset, "dataset id");
  adapt->add_option("--position", o.position, "sensor position");
  CLI::App* preprocess = app.add_subcommand("preprocess", "write the 66-sample segment dump");
  common(preprocess);
  output(preprocess);
  preprocess->add_option("--data", o.data, "canonical corpus directory or manifest");
  preprocess->add_option("--pair", o.pair, "restrict to one pair and tag domains");
  CLI::App* train = app.add_subcommand("train", "train one pair in one mode");
  common(train);
  output(train);
  training(train);
  CLI::App* grid = app.add_subcommand("grid", "27-tuple hyperparameter search on one pair");
  common(grid);
  output(grid);
  training(grid);
  CLI::App* evalpairs = app.add_subcommand("evalpairs", "five-fold evaluation of a pair or scenario");
  common(evalpairs);
  output(evalpairs);
  training(evalpairs);
  evalpairs->add_option("--scenario", o.scenario, "cross_position | cross_config");
  evalpairs->add_option("--dataset", o.dataset, "restrict cross_position to upfall or umafall");
  evalpairs->add_flag("--grid", o.grid, "grid-search hyperparameters in every fold");
  CLI::App* report = app.add_subcommand("report", "performance table from a results CSV");
  common(report);
  output(report);
  report->add_option("--data", o.data, "results CSV or the directory holding results.csv");
  CLI::App* features = app.add_subcommand("export-features", "extractor features of a pair's segments");
  common(features);
  output(features);
  features->add_option("--data", o.data, "canonical corpus directory or manifest");
  features->add_option("--pair", o.pair, "source:target as dataset.POS:dataset.POS");
  features->add_option("--checkpoint", o.checkpoint, "checkpoint file");
  CLI::App* gradcheck = app.add_subcommand("gradcheck", "finite-difference check of the analytic gradients");
  common(gradcheck);
  gradcheck->add_option("--lambda", o.lambda, "single lambda (default: 0.31, 1 and 1.3)");
  CLI::App* pairs = app.add_subcommand("pairs", "list the source-target pairs of a scenario");
  common(pairs);
  pairs->add_option("--scenario", o.scenario, "cross_position | cross_config");
  pairs->add_option("--dataset", o.dataset, "restrict cross_position to upfall or umafall");
  CLI::App* bench = app.add_subcommand("bench", "synthetic cross-domain benchmark");
  common(bench);
  output(bench);
  training(bench);
  bench->add_option("--seeds", o.seeds, "number of repetitions");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    const auto subs = app.get_subcommands();
    err << (subs.empty() ? app.help() : subs.front()->help());
    return kExitUsage;
  }

  CLI::App* sub = app.get_subcommands().front();
  const std::string name = sub->get_name();
  try {
    const KeyValueConfig kv = effective_config(*sub, o, name);
    if (name == "synth") return cmd_synth(kv, out);
    if (name == "adapt") return cmd_adapt(kv, out);
    if (name == "preprocess") return cmd_preprocess(kv, out);
    if (name == "train") return cmd_train(kv, out);
    if (name == "grid") return cmd_grid(kv, out);
    if (name == "evalpairs") return cmd_evalpairs(kv, *sub, out);
    if (name == "report") return cmd_report(kv, out);
    if (name == "export-features") return cmd_export_features(kv, out);
    if (name == "gradcheck") return cmd_gradcheck(kv, *sub, out);
    if (name == "pairs") return cmd_pairs(kv, out);
    if (name == "bench") return cmd_bench(kv, out);
    err << "error: unhandled command " << name << '\n';
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n' << sub->help();
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace dafd::cli
