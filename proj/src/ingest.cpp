#include "dafd/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "dafd/error.hpp"
#include "dafd/text_io.hpp"

namespace fs = std::filesystem;

namespace dafd {
namespace {

std::string location(const fs::path& file, std::size_t line) {
  return file.string() + ":" + std::to_string(line);
}

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

bool starts_with(const std::string& text, const std::string& prefix) {
  return !prefix.empty() && text.rfind(prefix, 0) == 0;
}

std::vector<Vec3> read_trial_samples(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("missing trial file: " + path.string());
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw DataError(location(path, 1) + ": empty trial file");
  ++line_no;
  const auto header = split(strip_cr(line), ',');
  if (header.size() != 3 || trim(header[0]) != "ax" || trim(header[1]) != "ay" ||
      trim(header[2]) != "az") {
    throw DataError(location(path, line_no) + ": expected header 'ax,ay,az'");
  }
  std::vector<Vec3> samples;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (trim(line).empty()) continue;
    const auto fields = split(line, ',');
    if (fields.size() != 3) {
      throw DataError(location(path, line_no) + ": expected 3 columns, got " +
                      std::to_string(fields.size()));
    }
    double v[3];
    for (int axis = 0; axis < 3; ++axis) {
      const auto parsed = parse_double(fields[axis]);
      if (!parsed) {
        throw DataError(location(path, line_no) + ": not a number: '" + fields[axis] + "'");
      }
      if (!std::isfinite(*parsed)) {
        throw DataError(location(path, line_no) + ": non-finite sample '" + fields[axis] + "'");
      }
      v[axis] = *parsed;
    }
    samples.push_back({v[0], v[1], v[2]});
  }
  if (samples.empty()) throw DataError(path.string() + ": empty trial");
  return samples;
}

std::string safe_file_stem(const std::string& id) {
  std::string out = id;
  for (char& c : out) {
    const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
    if (!ok) c = '_';
  }
  return out;
}

void check_field(const std::string& value, const char* name) {
  if (value.find_first_of(",\n\r") != std::string::npos) {
    throw DataError(std::string("field '") + name + "' contains a separator: " + value);
  }
}

}  // namespace

void validate_trial(const TrialRecord& trial) {
  if (trial.samples.empty()) throw DataError("trial " + trial.trial_id + ": no samples");
  if (!(trial.sample_rate_hz > 0.0) || !std::isfinite(trial.sample_rate_hz)) {
    throw DataError("trial " + trial.trial_id + ": sample rate must be positive");
  }
  for (std::size_t i = 0; i < trial.samples.size(); ++i) {
    const Vec3& s = trial.samples[i];
    if (!std::isfinite(s.x) || !std::isfinite(s.y) || !std::isfinite(s.z)) {
      throw DataError("trial " + trial.trial_id + ": non-finite sample at index " +
                      std::to_string(i));
    }
  }
  const bool code_is_fall = !trial.activity_code.empty() && trial.activity_code.front() == 'F';
  if (code_is_fall != (trial.label == Label::kFall)) {
    throw DataError("trial " + trial.trial_id + ": label " + std::string(to_string(trial.label)) +
                    " inconsistent with activity code " + trial.activity_code);
  }
}

std::vector<TrialRecord> load_canonical(const fs::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw DataError("missing manifest: " + manifest_path.string());
  const fs::path base = manifest_path.parent_path();

  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw DataError(location(manifest_path, 1) + ": missing header");
  ++line_no;
  if (trim(strip_cr(line)) != kManifestHeader) {
    throw DataError(location(manifest_path, line_no) + ": unexpected manifest header");
  }

  std::vector<TrialRecord> trials;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (trim(line).empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 8) {
      throw DataError(location(manifest_path, line_no) + ": expected 8 columns, got " +
                      std::to_string(f.size()));
    }
    TrialRecord t;
    t.trial_id = std::string(trim(f[0]));
    t.subject_id = std::string(trim(f[1]));
    t.dataset_id = std::string(trim(f[2]));
    t.position = std::string(trim(f[3]));
    t.activity_code = std::string(trim(f[4]));
    try {
      t.label = parse_label(f[5]);
    } catch (const DataError& e) {
      throw DataError(location(manifest_path, line_no) + ": " + e.what());
    }
    const auto rate = parse_double(f[6]);
    if (!rate || !std::isfinite(*rate) || *rate <= 0.0) {
      throw DataError(location(manifest_path, line_no) + ": non-positive sample rate '" + f[6] + "'");
    }
    t.sample_rate_hz = *rate;
    fs::path trial_path(std::string(trim(f[7])));
    if (trial_path.is_relative()) trial_path = base / trial_path;
    t.samples = read_trial_samples(trial_path);
    try {
      validate_trial(t);
    } catch (const DataError& e) {
      throw DataError(location(manifest_path, line_no) + ": " + e.what());
    }
    trials.push_back(std::move(t));
  }
  return trials;
}

fs::path write_canonical(const std::vector<TrialRecord>& trials, const fs::path& dir) {
  fs::create_directories(dir / "trials");
  std::ostringstream manifest;
  manifest << kManifestHeader << "\n";
  std::set<std::string> used;
  for (const TrialRecord& t : trials) {
    validate_trial(t);
    check_field(t.trial_id, "trial_id");
    check_field(t.subject_id, "subject_id");
    check_field(t.dataset_id, "dataset_id");
    check_field(t.position, "position");
    check_field(t.activity_code, "activity_code");
    std::string stem = safe_file_stem(t.trial_id);
    if (!used.insert(stem).second) throw DataError("duplicate trial id: " + t.trial_id);
    const std::string rel = "trials/" + stem + ".csv";

    std::string body = "ax,ay,az\n";
    body.reserve(t.samples.size() * 64);
    for (const Vec3& s : t.samples) {
      body += format_double(s.x);
      body += ',';
      body += format_double(s.y);
      body += ',';
      body += format_double(s.z);
      body += '\n';
    }
    write_file(dir / rel, body);
    manifest << t.trial_id << ',' << t.subject_id << ',' << t.dataset_id << ',' << t.position
             << ',' << t.activity_code << ',' << to_string(t.label) << ','
             << format_double(t.sample_rate_hz) << ',' << rel << "\n";
  }
  const fs::path manifest_path = dir / "manifest.csv";
  write_file(manifest_path, manifest.str());
  return manifest_path;
}

ColumnMapping load_column_mapping(const fs::path& path) {
  const KeyValueConfig kv = KeyValueConfig::load(path);
  static const std::set<std::string> known = {
      "time_col",          "x_col",           "y_col",     "z_col",
      "unit",              "rate_hz",         "label_prefix_fall",
      "label_prefix_adl",  "delimiter",       "name_subject_field",
      "name_activity_field"};
  for (const auto& [key, value] : kv.values()) {
    if (!known.count(key)) throw ConfigError(path.string() + ": unknown mapping key '" + key + "'");
  }
  ColumnMapping m;
  m.time_col = kv.get_string("time_col", "");
  m.x_col = kv.get_string("x_col", m.x_col);
  m.y_col = kv.get_string("y_col", m.y_col);
  m.z_col = kv.get_string("z_col", m.z_col);
  const std::string unit = to_lower(kv.get_string("unit", "g"));
  if (unit == "g") {
    m.unit = AccelUnit::kG;
  } else if (unit == "m_per_s2") {
    m.unit = AccelUnit::kMetersPerSecond2;
  } else {
    throw ConfigError(path.string() + ": unsupported unit '" + unit + "' (expected g or m_per_s2)");
  }
  m.rate_hz = kv.get_double("rate_hz", 0.0);
  if (!(m.rate_hz > 0.0)) throw ConfigError(path.string() + ": rate_hz must be positive");
  m.label_prefix_fall = kv.get_string("label_prefix_fall", m.label_prefix_fall);
  m.label_prefix_adl = kv.get_string("label_prefix_adl", m.label_prefix_adl);
  const std::string delim = kv.get_string("delimiter", ",");
  if (delim == "tab" || delim == "\\t") {
    m.delimiter = '\t';
  } else if (delim == "semicolon") {
    m.delimiter = ';';
  } else if (delim.size() == 1) {
    m.delimiter = delim[0];
  } else {
    throw ConfigError(path.string() + ": delimiter must be one character, 'tab' or 'semicolon'");
  }
  m.name_subject_field = static_cast<int>(kv.get_int("name_subject_field", 0));
  m.name_activity_field = static_cast<int>(kv.get_int("name_activity_field", 1));
  if (m.x_col == m.y_col || m.x_col == m.z_col || m.y_col == m.z_col) {
    throw ConfigError(path.string() + ": x, y and z columns must be distinct");
  }
  return m;
}

Label label_for_activity(const ColumnMapping& mapping, const std::string& activity_code) {
  if (starts_with(activity_code, mapping.label_prefix_fall)) return Label::kFall;
  if (starts_with(activity_code, mapping.label_prefix_adl)) return Label::kAdl;
  throw DataError("unknown activity code: '" + activity_code + "'");
}

namespace {

std::size_t resolve_column(const std::vector<std::string>& header, const std::string& spec,
                           const fs::path& file) {
  if (const auto index = parse_int(spec)) {
    if (*index < 0 || static_cast<std::size_t>(*index) >= header.size()) {
      throw DataError(file.string() + ": column index " + spec + " out of range");
    }
    return static_cast<std::size_t>(*index);
  }
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (trim(header[i]) == spec) return i;
  }
  throw DataError(file.string() + ": unresolvable column '" + spec + "'");
}

}  // namespace

std::vector<TrialRecord> adapt_dataset(const fs::path& raw_dir, const ColumnMapping& mapping,
                                       const std::string& dataset_id,
                                       const std::string& position) {
  if (!fs::is_directory(raw_dir)) throw DataError("not a directory: " + raw_dir.string());
  if (!(mapping.rate_hz > 0.0)) throw ConfigError("column mapping: rate_hz must be positive");
  if (mapping.unit != AccelUnit::kG && mapping.unit != AccelUnit::kMetersPerSecond2) {
    throw ConfigError("column mapping: unsupported unit");
  }

  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(raw_dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string ext = to_lower(entry.path().extension().string());
    if (ext == ".csv" || ext == ".txt") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename() < b.filename(); });

  const double scale = mapping.unit == AccelUnit::kMetersPerSecond2 ? 1.0 / kStandardGravity : 1.0;

  std::vector<TrialRecord> trials;
  for (const fs::path& file : files) {
    const std::string stem = file.stem().string();
    const auto name_fields = split(stem, '_');
    const auto field = [&](int idx) -> std::string {
      if (idx < 0 || static_cast<std::size_t>(idx) >= name_fields.size()) {
        throw DataError(file.string() + ": file name has no field " + std::to_string(idx));
      }
      return name_fields[static_cast<std::size_t>(idx)];
    };

    TrialRecord t;
    t.subject_id = field(mapping.name_subject_field);
    t.activity_code = field(mapping.name_activity_field);
    t.dataset_id = dataset_id;
    t.position = position;
    t.trial_id = dataset_id + "_" + position + "_" + stem;
    t.label = label_for_activity(mapping, t.activity_code);
    t.sample_rate_hz = mapping.rate_hz;

    std::ifstream in(file);
    if (!in) throw DataError("cannot open raw file: " + file.string());
    std::string line;
    if (!std::getline(in, line)) throw DataError(file.string() + ": empty raw file");
    const auto header = split(strip_cr(line), mapping.delimiter);
    const std::size_t cx = resolve_column(header, mapping.x_col, file);
    const std::size_t cy = resolve_column(header, mapping.y_col, file);
    const std::size_t cz = resolve_column(header, mapping.z_col, file);
    if (!mapping.time_col.empty()) resolve_column(header, mapping.time_col, file);
    const std::size_t needed = std::max({cx, cy, cz}) + 1;

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
      ++line_no;
      line = strip_cr(line);
      if (trim(line).empty()) continue;
      const auto fields = split(line, mapping.delimiter);
      if (fields.size() < needed) {
        throw DataError(location(file, line_no) + ": too few columns");
      }
      const auto read = [&](std::size_t col) {
        const auto v = parse_double(fields[col]);
        if (!v || !std::isfinite(*v)) {
          throw DataError(location(file, line_no) + ": bad sample '" + fields[col] + "'");
        }
        return *v * scale;
      };
      t.samples.push_back({read(cx), read(cy), read(cz)});
    }
    if (t.samples.empty()) throw DataError(file.string() + ": empty trial");
    trials.push_back(std::move(t));
  }
  return trials;
}

}  // namespace dafd
