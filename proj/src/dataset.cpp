#include "poisonguard/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "poisonguard/errors.hpp"
#include "poisonguard/rng.hpp"
#include "poisonguard/text.hpp"

namespace pg {

void DatasetSchema::validate() const {
  if (name.empty()) throw ConfigError("schema name is empty");
  if (feature_columns.empty()) throw ConfigError("schema has no feature columns");
  std::set<std::string> seen(feature_columns.begin(), feature_columns.end());
  if (seen.size() != feature_columns.size())
    throw ConfigError("schema feature columns are not distinct");
  if (label_column.empty()) throw ConfigError("schema has no label column");
  std::set<std::string> labels;
  for (const auto& l : label_set) labels.insert(normalize_label(l));
  if (labels.size() < 2) throw ConfigError("schema label set needs >= 2 distinct activities");
  if (default_window < 1) throw ConfigError("schema default window must be >= 1");
}

std::string DatasetSchema::normalize_label(const std::string& raw) {
  return text::title_case(text::trim(raw));
}

std::optional<std::string> DatasetSchema::match_label(const std::string& raw) const {
  std::string norm = normalize_label(raw);
  for (const auto& l : label_set) {
    if (normalize_label(l) == norm) return l;
  }
  return std::nullopt;
}

std::string DatasetSchema::canonical_label(const std::string& raw) const {
  if (auto m = match_label(raw)) return *m;
  throw UnknownLabel(raw);
}

bool DatasetSchema::is_builtin(const std::string& name) {
  std::string n = text::lower(name);
  return n == "motionsense" || n == "hhar" || n == "wisdm";
}

DatasetSchema DatasetSchema::builtin(const std::string& name) {
  std::string n = text::lower(name);
  DatasetSchema s;
  if (n == "motionsense") {
    s.name = "MotionSense";
    s.feature_columns = {"attitude.roll",       "attitude.pitch",      "attitude.yaw",
                         "gravity.x",           "gravity.y",           "gravity.z",
                         "rotationRate.x",      "rotationRate.y",      "rotationRate.z",
                         "userAcceleration.x",  "userAcceleration.y",  "userAcceleration.z"};
    s.label_set = {"Standing", "Sitting", "Walking", "Jogging", "Upstairs", "Downstairs"};
    s.default_window = 100;
  } else if (n == "hhar") {
    s.name = "HHAR";
    s.feature_columns = {"acc.x", "acc.y", "acc.z", "gyro.x", "gyro.y", "gyro.z"};
    s.label_set = {"Biking", "Sitting", "Standing", "Walking", "Stairsup", "Stairsdown"};
    s.default_window = 100;
  } else if (n == "wisdm") {
    s.name = "WISDM";
    s.feature_columns = {"acc.x", "acc.y", "acc.z"};
    s.label_set = {"Walking", "Jogging", "Upstairs", "Downstairs", "Sitting", "Standing"};
    s.default_window = 500;
  } else {
    throw ConfigError("unknown built-in schema: " + name);
  }
  s.label_column = "activity";
  s.subject_column = "subject";
  s.metadata_columns = {"timestamp"};
  return s;
}

DatasetSchema DatasetSchema::from_json(const io::ordered_json& j) {
  DatasetSchema s;
  s.name = j.at("name").get<std::string>();
  s.feature_columns = j.at("feature_columns").get<std::vector<std::string>>();
  s.label_column = j.at("label_column").get<std::string>();
  s.label_set = j.at("label_set").get<std::vector<std::string>>();
  s.default_window = j.at("default_window").get<int>();
  if (j.contains("subject_column")) s.subject_column = j["subject_column"].get<std::string>();
  if (j.contains("metadata_columns"))
    s.metadata_columns = j["metadata_columns"].get<std::vector<std::string>>();
  s.validate();
  return s;
}

DatasetSchema DatasetSchema::from_json_file(const std::string& path) {
  io::ordered_json j = io::ordered_json::parse(io::read_file(path));
  return from_json(j);
}

io::ordered_json DatasetSchema::to_json() const {
  io::ordered_json j;
  j["name"] = name;
  j["feature_columns"] = feature_columns;
  j["label_column"] = label_column;
  j["label_set"] = label_set;
  j["default_window"] = default_window;
  if (!subject_column.empty()) j["subject_column"] = subject_column;
  if (!metadata_columns.empty()) j["metadata_columns"] = metadata_columns;
  return j;
}

namespace {

// Minimal CSV split: the inputs are numeric sensor dumps, so quoting rules
// beyond stripping a surrounding pair are not needed.
std::vector<std::string> split_csv_row(const std::string& line) {
  std::vector<std::string> cells = text::split(line, ',');
  for (auto& c : cells) {
    c = text::trim(c);
    if (c.size() >= 2 && c.front() == '"' && c.back() == '"') {
      c = c.substr(1, c.size() - 2);
    }
  }
  return cells;
}

double parse_number(const std::string& cell, std::size_t row, const std::string& column) {
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  double value = 0;
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) throw NonFiniteValue(row, column);
  if (!std::isfinite(value)) throw NonFiniteValue(row, column);
  return value;
}

}  // namespace

std::vector<LabeledRow> load_dataset(const std::string& path, const DatasetSchema& schema) {
  schema.validate();
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset: " + path);

  std::string header_line;
  if (!std::getline(in, header_line)) return {};
  if (!header_line.empty() && header_line.back() == '\r') header_line.pop_back();

  std::vector<std::string> header = split_csv_row(header_line);
  auto find_column = [&](const std::string& name) -> int {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return static_cast<int>(i);
    }
    return -1;
  };

  std::vector<int> feature_idx;
  for (const auto& col : schema.feature_columns) {
    int idx = find_column(col);
    if (idx < 0) throw MissingColumn(col);
    feature_idx.push_back(idx);
  }
  int label_idx = find_column(schema.label_column);
  if (label_idx < 0) throw MissingColumn(schema.label_column);
  int subject_idx = schema.subject_column.empty() ? -1 : find_column(schema.subject_column);

  std::vector<LabeledRow> rows;
  std::string line;
  std::size_t lineno = 1;  // header consumed
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::trim(line).empty()) continue;
    std::vector<std::string> cells = split_csv_row(line);
    if (cells.size() < header.size())
      throw DataError("row " + std::to_string(lineno) + " has " +
                      std::to_string(cells.size()) + " cells, expected " +
                      std::to_string(header.size()));
    LabeledRow row;
    row.sample.values.reserve(feature_idx.size());
    for (std::size_t f = 0; f < feature_idx.size(); ++f) {
      const std::string& cell = cells[static_cast<std::size_t>(feature_idx[f])];
      if (cell.empty()) throw NonFiniteValue(lineno, schema.feature_columns[f]);
      row.sample.values.push_back(parse_number(cell, lineno, schema.feature_columns[f]));
    }
    const std::string& raw_label = cells[static_cast<std::size_t>(label_idx)];
    if (auto m = schema.match_label(raw_label)) {
      row.label = *m;
    } else {
      throw UnknownLabel(raw_label, lineno);
    }
    if (subject_idx >= 0) row.subject = cells[static_cast<std::size_t>(subject_idx)];
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string to_string(WindowPolicy p) {
  return p == WindowPolicy::SameLabelOnly ? "same_label_only" : "majority_label";
}

WindowPolicy window_policy_from_string(const std::string& s) {
  std::string n = text::lower(text::trim(s));
  if (n == "same_label_only" || n == "samelabelonly") return WindowPolicy::SameLabelOnly;
  if (n == "majority_label" || n == "majoritylabel") return WindowPolicy::MajorityLabel;
  throw ConfigError("unknown window policy: " + s);
}

namespace {

std::string majority_label(const std::vector<LabeledRow>& rows, std::size_t begin,
                           std::size_t end) {
  std::map<std::string, std::size_t> counts;
  for (std::size_t i = begin; i < end; ++i) ++counts[rows[i].label];
  // Largest count wins; ties go to the label that appears first in the window.
  std::string best;
  std::size_t best_count = 0;
  for (std::size_t i = begin; i < end; ++i) {
    std::size_t c = counts[rows[i].label];
    if (c > best_count) {
      best_count = c;
      best = rows[i].label;
    }
  }
  return best;
}

}  // namespace

std::vector<LabeledWindow> segment(const std::vector<LabeledRow>& rows,
                                   const DatasetSchema& schema, int window_len,
                                   WindowPolicy policy, SegmentStats* stats) {
  if (window_len < 1) throw ConfigError("window length must be >= 1");
  const std::size_t w = static_cast<std::size_t>(window_len);

  std::vector<LabeledWindow> windows;
  std::size_t discarded = 0;

  // Windows never straddle a subject change: each contiguous same-subject run
  // is segmented independently.
  std::size_t run_begin = 0;
  while (run_begin < rows.size()) {
    std::size_t run_end = run_begin + 1;
    while (run_end < rows.size() && rows[run_end].subject == rows[run_begin].subject)
      ++run_end;

    std::size_t cursor = run_begin;
    while (cursor + w <= run_end) {
      std::size_t end = cursor + w;
      bool uniform = true;
      for (std::size_t i = cursor + 1; i < end && uniform; ++i) {
        uniform = rows[i].label == rows[cursor].label;
      }
      if (!uniform && policy == WindowPolicy::SameLabelOnly) {
        discarded += w;
      } else {
        LabeledWindow win;
        win.source_dataset = schema.name;
        win.row_begin = cursor;
        win.row_end = end;
        win.subject = rows[cursor].subject;
        win.label = uniform ? rows[cursor].label : majority_label(rows, cursor, end);
        win.window_id = schema.name + ":" + std::to_string(cursor) + "-" + std::to_string(end);
        win.samples.reserve(w);
        for (std::size_t i = cursor; i < end; ++i) win.samples.push_back(rows[i].sample);
        windows.push_back(std::move(win));
      }
      cursor = end;
    }
    discarded += run_end - cursor;  // trailing partial of this run
    run_begin = run_end;
  }

  if (stats) {
    stats->input_samples = rows.size();
    stats->windows = windows.size();
    stats->discarded_samples = discarded;
  }
  return windows;
}

std::size_t ExamplePool::total() const {
  std::size_t n = 0;
  for (const auto& [_, v] : by_activity) n += v.size();
  return n;
}

std::pair<ExamplePool, std::vector<LabeledWindow>> build_example_pool(
    const std::vector<LabeledWindow>& windows, int per_class, std::uint64_t seed,
    const std::vector<std::string>* label_set) {
  if (per_class < 0) throw ConfigError("per_class must be >= 0");

  ExamplePool pool;
  pool.per_class = per_class;
  if (per_class == 0) return {pool, windows};

  std::map<std::string, std::vector<std::size_t>> by_label;
  if (label_set) {
    for (const auto& l : *label_set) by_label[l];  // activities with no windows fail below
  }
  for (std::size_t i = 0; i < windows.size(); ++i) by_label[windows[i].label].push_back(i);

  std::set<std::size_t> taken;
  for (auto& [label, idx] : by_label) {
    if (idx.size() < static_cast<std::size_t>(per_class))
      throw InsufficientExamples(label, idx.size(), static_cast<std::size_t>(per_class));
    // Substream keyed by activity so the draw for one class does not shift
    // when another class gains or loses windows.
    rng::Stream stream = rng::derive(seed, "example_pool:" + label);
    std::vector<std::size_t> shuffled = idx;
    stream.shuffle(shuffled);
    for (int k = 0; k < per_class; ++k) {
      pool.by_activity[label].push_back(windows[shuffled[static_cast<std::size_t>(k)]]);
      taken.insert(shuffled[static_cast<std::size_t>(k)]);
    }
  }

  std::vector<LabeledWindow> remaining;
  remaining.reserve(windows.size() - taken.size());
  for (std::size_t i = 0; i < windows.size(); ++i) {
    if (!taken.count(i)) remaining.push_back(windows[i]);
  }
  return {pool, remaining};
}

io::ordered_json window_to_json(const LabeledWindow& w) {
  io::ordered_json j;
  j["window_id"] = w.window_id;
  j["label"] = w.label;
  j["source"] = {{"dataset", w.source_dataset},
                 {"row_begin", w.row_begin},
                 {"row_end", w.row_end},
                 {"subject", w.subject}};
  io::ordered_json samples = io::ordered_json::array();
  for (const auto& s : w.samples) samples.push_back(s.values);
  j["samples"] = std::move(samples);
  return j;
}

LabeledWindow window_from_json(const io::ordered_json& j) {
  LabeledWindow w;
  w.window_id = j.at("window_id").get<std::string>();
  w.label = j.at("label").get<std::string>();
  const auto& src = j.at("source");
  w.source_dataset = src.at("dataset").get<std::string>();
  w.row_begin = src.at("row_begin").get<std::size_t>();
  w.row_end = src.at("row_end").get<std::size_t>();
  w.subject = src.at("subject").get<std::string>();
  for (const auto& row : j.at("samples")) {
    SensorSample s;
    s.values = row.get<std::vector<double>>();
    w.samples.push_back(std::move(s));
  }
  return w;
}

void write_windows_jsonl(const std::string& path, const std::vector<LabeledWindow>& windows) {
  std::vector<io::ordered_json> rows;
  rows.reserve(windows.size());
  for (const auto& w : windows) rows.push_back(window_to_json(w));
  io::write_jsonl(path, rows);
}

std::vector<LabeledWindow> read_windows_jsonl(const std::string& path) {
  std::vector<LabeledWindow> windows;
  for (const auto& j : io::read_jsonl(path)) windows.push_back(window_from_json(j));
  return windows;
}

}  // namespace pg
