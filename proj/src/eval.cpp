#include "dafd/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include <boost/math/special_functions/beta.hpp>

#include "dafd/error.hpp"
#include "dafd/text_io.hpp"

namespace dafd {
namespace {

double ratio(std::int64_t num, std::int64_t den, bool* degenerate) {
  *degenerate = den == 0;
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

std::string pct(double v) { return format_fixed(100.0 * v, 2); }

const char* metric_name(int m) {
  static const char* names[] = {"SEN", "SPE", "PRE", "F1"};
  return names[m];
}

double metric_value(const MetricSet& s, int m) {
  switch (m) {
    case 0: return s.sen;
    case 1: return s.spe;
    case 2: return s.pre;
    default: return s.f1;
  }
}

// Display width in columns: UTF-8 continuation bytes do not count.
std::size_t display_width(const std::string& s) {
  std::size_t w = 0;
  for (unsigned char c : s) {
    if ((c & 0xC0) != 0x80) ++w;
  }
  return w;
}

std::string pad_left(const std::string& s, std::size_t width) {
  const std::size_t w = display_width(s);
  return w >= width ? s : std::string(width - w, ' ') + s;
}

std::string pad_right(const std::string& s, std::size_t width) {
  const std::size_t w = display_width(s);
  return w >= width ? s : s + std::string(width - w, ' ');
}

double median(std::vector<double> xs) {
  if (xs.empty()) return 0.0;
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  return n % 2 == 1 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

const std::vector<PairSpec>& golden_pairs(Scenario scenario, const std::string& dataset) {
  static const auto make = [](Scenario sc, const char* src_ds, const char* tgt_ds,
                              std::vector<std::pair<const char*, const char*>> list) {
    std::vector<PairSpec> out;
    for (const auto& [s, t] : list) out.push_back({sc, {src_ds, s}, {tgt_ds, t}});
    return out;
  };
  static const std::vector<PairSpec> upfall =
      make(Scenario::kCrossPosition, kUpFall, kUpFall,
           {{"N", "WA"},  {"N", "RP"},  {"N", "WR"},  {"N", "A"},   {"WA", "RP"}, {"WA", "WR"}, {"WA", "A"},
            {"WA", "N"},  {"RP", "A"},  {"RP", "WA"}, {"RP", "WR"}, {"RP", "N"},  {"WR", "N"},  {"WR", "RP"},
            {"WR", "A"},  {"WR", "WA"}, {"A", "WA"},  {"A", "N"},   {"A", "RP"},  {"A", "WR"}});
  static const std::vector<PairSpec> umafall =
      make(Scenario::kCrossPosition, kUmaFall, kUmaFall,
           {{"C", "WA"}, {"C", "WR"}, {"C", "A"}, {"WA", "WR"}, {"WA", "A"}, {"WA", "C"},
            {"WR", "A"}, {"WR", "WA"}, {"WR", "C"}, {"A", "C"}, {"A", "WA"}, {"A", "WR"}});
  static const std::vector<PairSpec> config = [] {
    std::vector<PairSpec> out =
        make(Scenario::kCrossConfig, kUpFall, kUmaFall, {{"WA", "WA"}, {"RP", "LP"}, {"WR", "WR"}, {"A", "A"}});
    const std::vector<PairSpec> back =
        make(Scenario::kCrossConfig, kUmaFall, kUpFall, {{"WA", "WA"}, {"LP", "RP"}, {"WR", "WR"}, {"A", "A"}});
    out.insert(out.end(), back.begin(), back.end());
    return out;
  }();
  static const std::vector<PairSpec> both = [] {
    std::vector<PairSpec> out = upfall;
    out.insert(out.end(), umafall.begin(), umafall.end());
    return out;
  }();
  if (scenario == Scenario::kCrossConfig) return config;
  if (dataset.empty()) return both;
  if (dataset == kUpFall) return upfall;
  if (dataset == kUmaFall) return umafall;
  throw ConfigError("unknown dataset '" + dataset + "' for cross_position (expected upfall or umafall)");
}

std::vector<Label> labels_of(const std::vector<Segment>& segments) {
  std::vector<Label> out;
  for (const Segment& s : segments) out.push_back(*s.label);
  return out;
}

SegmentPool labeled_only(const SegmentPool& pool) {
  std::vector<Segment> keep;
  for (const Segment& s : pool.segments) {
    if (s.label) keep.push_back(s);
  }
  return SegmentPool::build(std::move(keep), pool.domain);
}

}  // namespace

// ---- metrics ----

ConfusionCounts confusion(const std::vector<Label>& predictions, const std::vector<Label>& labels) {
  if (predictions.size() != labels.size()) {
    throw DataError("confusion: " + std::to_string(predictions.size()) + " predictions for " +
                    std::to_string(labels.size()) + " labels");
  }
  ConfusionCounts c;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool pred_fall = predictions[i] == Label::kFall;
    const bool true_fall = labels[i] == Label::kFall;
    if (pred_fall && true_fall) ++c.tp;
    if (!pred_fall && !true_fall) ++c.tn;
    if (pred_fall && !true_fall) ++c.fp;
    if (!pred_fall && true_fall) ++c.fn;
  }
  return c;
}

MetricSet metrics(const ConfusionCounts& c) {
  MetricSet m;
  m.sen = ratio(c.tp, c.tp + c.fn, &m.sen_degenerate);
  m.spe = ratio(c.tn, c.tn + c.fp, &m.spe_degenerate);
  m.pre = ratio(c.tp, c.tp + c.fp, &m.pre_degenerate);
  const double den = m.sen + m.pre;
  m.f1_degenerate = den == 0.0;
  m.f1 = den == 0.0 ? 0.0 : 2.0 * m.sen * m.pre / den;
  return m;
}

MetricSet mean_metrics(const std::vector<MetricSet>& sets) {
  MetricSet m;
  if (sets.empty()) return m;
  for (const MetricSet& s : sets) {
    m.sen += s.sen;
    m.spe += s.spe;
    m.pre += s.pre;
    m.f1 += s.f1;
    m.sen_degenerate |= s.sen_degenerate;
    m.spe_degenerate |= s.spe_degenerate;
    m.pre_degenerate |= s.pre_degenerate;
    m.f1_degenerate |= s.f1_degenerate;
  }
  const auto n = static_cast<double>(sets.size());
  m.sen /= n;
  m.spe /= n;
  m.pre /= n;
  m.f1 /= n;
  return m;
}

// ---- folds ----

std::size_t FoldPlan::group_of(const std::string& subject) const {
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (std::find(groups[g].begin(), groups[g].end(), subject) != groups[g].end()) return g;
  }
  throw DataError("subject '" + subject + "' is not in the fold plan");
}

FoldPlan lsocv_folds(std::vector<std::string> subject_ids, std::uint64_t seed, int k) {
  if (k < 2) throw ConfigError("fold count must be >= 2");
  std::sort(subject_ids.begin(), subject_ids.end());
  subject_ids.erase(std::unique(subject_ids.begin(), subject_ids.end()), subject_ids.end());
  if (subject_ids.size() < static_cast<std::size_t>(k)) {
    throw DataError("need at least " + std::to_string(k) + " subjects for " + std::to_string(k) +
                    "-fold evaluation, got " + std::to_string(subject_ids.size()));
  }
  std::mt19937_64 rng(seed);
  std::shuffle(subject_ids.begin(), subject_ids.end(), rng);
  FoldPlan plan;
  plan.seed = seed;
  plan.groups.resize(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < subject_ids.size(); ++i) {
    plan.groups[i % static_cast<std::size_t>(k)].push_back(subject_ids[i]);
  }
  return plan;
}

// ---- pairs ----

std::string_view to_string(Scenario scenario) {
  return scenario == Scenario::kCrossPosition ? "cross_position" : "cross_config";
}

Scenario parse_scenario(std::string_view text) {
  std::string s = to_lower(std::string(trim(text)));
  std::replace(s.begin(), s.end(), '-', '_');
  if (s == "cross_position") return Scenario::kCrossPosition;
  if (s == "cross_config") return Scenario::kCrossConfig;
  throw ConfigError("unknown scenario '" + std::string(text) + "' (expected cross_position or cross_config)");
}

std::string PairSpec::id() const {
  return source.dataset_id + "." + source.position + ":" + target.dataset_id + "." + target.position;
}

PairSpec parse_pair(std::string_view text) {
  const auto sides = split(trim(text), ':');
  if (sides.size() != 2) throw ConfigError("pair must look like dataset.POS:dataset.POS, got '" + std::string(text) + "'");
  const auto endpoint = [&](const std::string& side) {
    const std::size_t dot = side.find('.');
    if (dot == std::string::npos || dot == 0 || dot + 1 == side.size()) {
      throw ConfigError("pair endpoint must look like dataset.POS, got '" + side + "'");
    }
    return Endpoint{side.substr(0, dot), side.substr(dot + 1)};
  };
  PairSpec p;
  p.source = endpoint(std::string(trim(sides[0])));
  p.target = endpoint(std::string(trim(sides[1])));
  if (p.source.dataset_id == p.target.dataset_id) {
    if (p.source.position == p.target.position) throw ConfigError("pair source and target are identical");
    p.scenario = Scenario::kCrossPosition;
  } else {
    p.scenario = Scenario::kCrossConfig;
  }
  return p;
}

std::vector<PairSpec> enumerate_pairs(Scenario scenario, std::string_view dataset) {
  return golden_pairs(scenario, to_lower(std::string(trim(dataset))));
}

// ---- significance ----

TTest ttest(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() < 2 || b.size() < 2) throw ConfigError("ttest needs at least 2 values per sample");
  const auto mean = [](const std::vector<double>& x) {
    double s = 0.0;
    for (double v : x) s += v;
    return s / static_cast<double>(x.size());
  };
  const double ma = mean(a);
  const double mb = mean(b);
  double ss = 0.0;
  for (double v : a) ss += (v - ma) * (v - ma);
  for (double v : b) ss += (v - mb) * (v - mb);
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double df = na + nb - 2.0;
  const double pooled = ss / df;
  TTest r;
  if (pooled == 0.0) {
    if (ma == mb) return r;
    r.t = ma > mb ? HUGE_VAL : -HUGE_VAL;
    r.p = 0.0;
    r.significant = true;
    return r;
  }
  r.t = (ma - mb) / std::sqrt(pooled * (1.0 / na + 1.0 / nb));
  // Two-tailed p = I_{df / (df + t^2)}(df / 2, 1 / 2).
  r.p = boost::math::ibeta(df / 2.0, 0.5, df / (df + r.t * r.t));
  r.significant = r.p < kAlpha;
  return r;
}

// ---- pair evaluation ----

PairData select_pair(const std::vector<Segment>& segments, const PairSpec& pair) {
  std::vector<Segment> src;
  std::vector<Segment> tgt;
  for (const Segment& s : segments) {
    if (s.dataset_id == pair.source.dataset_id && s.position == pair.source.position) {
      src.push_back(s);
      src.back().domain = Domain::kSource;
    }
    if (s.dataset_id == pair.target.dataset_id && s.position == pair.target.position) {
      tgt.push_back(s);
      tgt.back().domain = Domain::kTarget;
    }
  }
  if (src.empty()) throw DataError("no segments for source " + pair.source.dataset_id + "." + pair.source.position);
  if (tgt.empty()) throw DataError("no segments for target " + pair.target.dataset_id + "." + pair.target.position);
  return {SegmentPool::build(std::move(src), Domain::kSource), SegmentPool::build(std::move(tgt), Domain::kTarget)};
}

std::vector<PairResult> run_pair(const PairSpec& pair, const PairData& data, const EvalConfig& cfg) {
  validate(cfg.train);
  if (cfg.hp) validate(*cfg.hp);
  if (cfg.modes.empty()) throw ConfigError("run_pair: no modes requested");
  if (data.source.empty() || data.target.empty()) throw DataError("run_pair: empty pool for " + pair.id());

  FoldPlan src_plan;
  FoldPlan tgt_plan;
  if (pair.source.dataset_id == pair.target.dataset_id) {
    std::vector<std::string> ids = data.source.subjects();
    const std::vector<std::string> t = data.target.subjects();
    ids.insert(ids.end(), t.begin(), t.end());
    src_plan = lsocv_folds(ids, cfg.train.seed);
    tgt_plan = src_plan;
  } else {
    src_plan = lsocv_folds(data.source.subjects(), derive_seed(cfg.train.seed, 1));
    tgt_plan = lsocv_folds(data.target.subjects(), derive_seed(cfg.train.seed, 2));
  }

  const std::size_t n_modes = cfg.modes.size();
  std::vector<FoldResult> cells(kFolds * n_modes);
  parallel_for(cells.size(), cfg.jobs, [&](std::size_t job) {
    const int fold = static_cast<int>(job / n_modes);
    const TrainMode mode = cfg.modes[job % n_modes];
    const auto& src_test = src_plan.groups[static_cast<std::size_t>(fold)];
    const auto& tgt_test = tgt_plan.groups[static_cast<std::size_t>(fold)];
    const SegmentPool train_source = data.source.select_subjects(src_test, false);
    const SegmentPool train_target = data.target.select_subjects(tgt_test, false);
    const SegmentPool test = labeled_only(data.target.select_subjects(tgt_test, true));

    TrainConfig tc = cfg.train;
    tc.mode = mode;
    tc.seed = derive_seed(cfg.train.seed, 1000 + static_cast<std::uint64_t>(fold));
    FoldResult r;
    r.fold = fold;
    nn::ModelParams params;
    if (cfg.hp) {
      FitResult f = fit(train_source, train_target, *cfg.hp, tc);
      r.hp = *cfg.hp;
      r.best_epoch = f.history.best_epoch;
      params = std::move(f.best.params);
    } else {
      GridResult g = grid_search(train_source, train_target, tc, 1);
      r.hp = g.entries[g.best_index].hp;
      r.best_epoch = g.best_fit.history.best_epoch;
      params = std::move(g.best_fit.best.params);
    }
    r.counts = confusion(predict(params, test.segments), labels_of(test.segments));
    r.metrics = metrics(r.counts);
    cells[job] = r;
  });

  std::vector<PairResult> out;
  for (std::size_t m = 0; m < n_modes; ++m) {
    PairResult pr;
    pr.pair = pair;
    pr.mode = cfg.modes[m];
    std::vector<MetricSet> sets;
    for (int f = 0; f < kFolds; ++f) {
      pr.folds.push_back(cells[static_cast<std::size_t>(f) * n_modes + m]);
      sets.push_back(pr.folds.back().metrics);
    }
    pr.mean = mean_metrics(sets);
    out.push_back(std::move(pr));
  }
  return out;
}

std::string results_csv(const std::vector<PairResult>& results) {
  std::ostringstream out;
  out << "scenario,pair,mode,fold,tp,tn,fp,fn,sen,spe,pre,f1,dropout,lr,lambda,best_epoch\n";
  for (const PairResult& pr : results) {
    for (const FoldResult& f : pr.folds) {
      out << to_string(pr.pair.scenario) << ',' << pr.pair.id() << ',' << to_string(pr.mode) << ',' << f.fold << ','
          << f.counts.tp << ',' << f.counts.tn << ',' << f.counts.fp << ',' << f.counts.fn << ','
          << format_double(f.metrics.sen) << ',' << format_double(f.metrics.spe) << ','
          << format_double(f.metrics.pre) << ',' << format_double(f.metrics.f1) << ','
          << format_double(f.hp.dropout) << ',' << format_double(f.hp.lr) << ',' << format_double(f.hp.lambda)
          << ',' << f.best_epoch << '\n';
    }
  }
  return out.str();
}

std::vector<PairResult> parse_results_csv(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line) || trim(line).rfind("scenario,pair,mode,fold", 0) != 0) {
    throw DataError("results CSV: missing header");
  }
  std::vector<PairResult> out;
  std::map<std::pair<std::string, TrainMode>, std::size_t> index;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::string where = "results CSV line " + std::to_string(line_no);
    const auto f = split(trim(line), ',');
    if (f.size() != 16) throw DataError(where + ": expected 16 columns");
    const auto integer = [&](std::size_t i) {
      const auto v = parse_int(f[i]);
      if (!v || *v < 0) throw DataError(where + ": bad integer '" + f[i] + "'");
      return *v;
    };
    const auto real = [&](std::size_t i) {
      const auto v = parse_double(f[i]);
      if (!v || !std::isfinite(*v)) throw DataError(where + ": bad number '" + f[i] + "'");
      return *v;
    };
    try {
      PairSpec pair = parse_pair(f[1]);
      pair.scenario = parse_scenario(f[0]);
      const TrainMode mode = parse_train_mode(f[2]);
      FoldResult r;
      r.fold = static_cast<int>(integer(3));
      r.counts = {integer(4), integer(5), integer(6), integer(7)};
      r.metrics = metrics(r.counts);
      r.hp = {real(12), real(13), real(14)};
      r.best_epoch = static_cast<int>(integer(15));
      const auto key = std::make_pair(pair.id(), mode);
      auto it = index.find(key);
      if (it == index.end()) {
        it = index.emplace(key, out.size()).first;
        out.push_back({pair, mode, {}, {}});
      }
      out[it->second].folds.push_back(r);
    } catch (const ConfigError& e) {
      throw DataError(where + ": " + e.what());
    }
  }
  for (PairResult& pr : out) {
    std::vector<MetricSet> sets;
    for (const FoldResult& f : pr.folds) sets.push_back(f.metrics);
    pr.mean = mean_metrics(sets);
  }
  return out;
}

// ---- report ----

std::string report_column(const PairSpec& pair) {
  if (pair.scenario == Scenario::kCrossPosition) return pair.source.dataset_id;
  return pair.source.dataset_id + "->" + pair.target.dataset_id;
}

Report build_report(const std::vector<PairResult>& results) {
  if (results.empty()) throw DataError("build_report: no results");
  std::vector<std::string> columns;
  for (const PairResult& pr : results) {
    const std::string c = report_column(pr.pair);
    if (std::find(columns.begin(), columns.end(), c) == columns.end()) columns.push_back(c);
  }

  struct Cell {
    bool present = false;
    double value = 0.0;
    std::string marker;
    std::optional<double> p;
  };
  const auto fold_scores = [&](const std::string& column, TrainMode mode, int metric) {
    std::vector<double> xs;
    for (const PairResult& pr : results) {
      if (pr.mode != mode || report_column(pr.pair) != column) continue;
      for (const FoldResult& f : pr.folds) xs.push_back(metric_value(f.metrics, metric));
    }
    return xs;
  };
  const auto cell = [&](const std::string& column, TrainMode mode, int metric) {
    Cell c;
    std::vector<double> means;
    for (const PairResult& pr : results) {
      if (pr.mode == mode && report_column(pr.pair) == column) means.push_back(metric_value(pr.mean, metric));
    }
    if (means.empty()) return c;
    c.present = true;
    for (double v : means) c.value += v;
    c.value /= static_cast<double>(means.size());
    if (mode == TrainMode::kDafd || mode == TrainMode::kDafdAdl) {
      const std::vector<double> a = fold_scores(column, mode, metric);
      const std::vector<double> b = fold_scores(column, TrainMode::kSourceOnly, metric);
      if (a.size() >= 2 && b.size() >= 2) {
        const TTest t = ttest(a, b);
        c.p = t.p;
        if (t.significant) c.marker = mode == TrainMode::kDafdAdl ? "*" : "†";
      }
    }
    return c;
  };

  std::ostringstream csv;
  csv << "level,column,pair,metric,mode,value,marker,p_value\n";
  std::vector<std::vector<std::string>> rows;
  rows.push_back({"Metric", "Mode"});
  for (const std::string& c : columns) rows.front().push_back(c);
  for (int metric = 0; metric < 4; ++metric) {
    for (TrainMode mode : kAllModes) {
      std::vector<std::string> row{mode == kAllModes.front() ? metric_name(metric) : "",
                                   std::string(display_name(mode))};
      for (const std::string& column : columns) {
        const Cell c = cell(column, mode, metric);
        row.push_back(c.present ? pct(c.value) + c.marker : "-");
        if (c.present) {
          csv << "column," << column << ",," << metric_name(metric) << ',' << to_string(mode) << ','
              << pct(c.value) << ',' << c.marker << ',' << (c.p ? format_double(*c.p) : "") << '\n';
        }
      }
      rows.push_back(std::move(row));
    }
  }
  for (const PairResult& pr : results) {
    for (int metric = 0; metric < 4; ++metric) {
      csv << "pair," << report_column(pr.pair) << ',' << pr.pair.id() << ',' << metric_name(metric) << ','
          << to_string(pr.mode) << ',' << pct(metric_value(pr.mean, metric)) << ",,\n";
    }
  }

  std::vector<std::size_t> widths(rows.front().size(), 0);
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) widths[i] = std::max(widths[i], display_width(row[i]));
  }
  std::ostringstream text;
  for (const auto& row : rows) {
    std::string line;
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i > 0) line += "  ";
      line += i < 2 ? pad_right(row[i], widths[i]) : pad_left(row[i], widths[i]);
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    text << line << '\n';
  }
  text << "\n* DAFD_adl vs Source-only, † DAFD vs Source-only: p < 0.05 (pooled t-test over fold scores)\n";
  return {text.str(), csv.str()};
}

// ---- feature export ----

std::string features_csv(const nn::ModelParams& params, const std::vector<Segment>& segments) {
  std::ostringstream out;
  for (std::size_t i = 0; i < nn::kFeatureDim; ++i) out << 'f' << i << ',';
  out << "label,domain\n";
  constexpr std::size_t kChunk = 256;
  for (std::size_t begin = 0; begin < segments.size(); begin += kChunk) {
    const std::size_t end = std::min(segments.size(), begin + kChunk);
    std::vector<const std::vector<double>*> rows;
    for (std::size_t i = begin; i < end; ++i) rows.push_back(&segments[i].values);
    const nn::Tensor feats = nn::extract_features(params, nn::make_batch(rows));
    for (std::size_t i = begin; i < end; ++i) {
      for (std::size_t j = 0; j < nn::kFeatureDim; ++j) out << format_double(feats.at(i - begin, j)) << ',';
      const Segment& s = segments[i];
      out << (s.label ? std::string(to_string(*s.label)) : std::string()) << ',' << to_string(s.domain) << '\n';
    }
  }
  return out.str();
}

std::size_t export_features(const nn::ModelParams& params, const std::vector<Segment>& segments,
                            const std::filesystem::path& path) {
  write_file(path, features_csv(params, segments));
  return segments.size();
}

// ---- synthetic benchmark ----

DomainShift benchmark_shift() {
  DomainShift s;
  s.rotation_rad = 25.0 * std::numbers::pi / 180.0;
  s.gain = {0.9, 1.1, 1.0};
  return s;
}

BenchmarkResult run_benchmark(const BenchmarkConfig& cfg) {
  BenchmarkResult out;
  const WindowConfig window;
  const PairSpec pair{Scenario::kCrossPosition,
                      {cfg.spec.dataset_id, cfg.spec.source_position},
                      {cfg.spec.dataset_id, cfg.spec.target_position}};
  std::vector<std::vector<double>> f1(cfg.modes.size());
  for (std::uint64_t seed : cfg.seeds) {
    SynthSpec spec = cfg.spec;
    spec.seed = seed;
    std::vector<Segment> segments = preprocess_all(synth_corpus(spec), window, {}, nullptr);
    EvalConfig ec;
    ec.train = cfg.train;
    ec.train.seed = derive_seed(seed, 7);
    ec.hp = cfg.hp;
    ec.modes = cfg.modes;
    ec.jobs = cfg.jobs;
    std::vector<PairResult> results = run_pair(pair, select_pair(segments, pair), ec);
    for (std::size_t m = 0; m < results.size(); ++m) f1[m].push_back(results[m].mean.f1);
    out.per_seed.push_back(std::move(results));
  }
  for (const auto& xs : f1) out.median_f1.push_back(median(xs));
  return out;
}

}  // namespace dafd
