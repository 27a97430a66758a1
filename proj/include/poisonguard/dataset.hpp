#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "poisonguard/jsonl.hpp"

namespace pg {

// Column layout and label vocabulary of one HAR source. Built-ins cover the
// MotionSense, HHAR, and WISDM layouts; anything else comes in through a JSON
// descriptor file so the tool is not hard-wired to three datasets.
struct DatasetSchema {
  std::string name;
  std::vector<std::string> feature_columns;
  std::string label_column;
  std::vector<std::string> label_set;  // canonical spellings
  int default_window = 100;
  std::string subject_column;  // optional; empty when the source has none
  std::vector<std::string> metadata_columns;  // carried opaque, never features

  void validate() const;
  std::size_t feature_count() const { return feature_columns.size(); }

  // Trim + TitleCase fold, then match against label_set. Throws UnknownLabel.
  std::string canonical_label(const std::string& raw) const;
  std::optional<std::string> match_label(const std::string& raw) const;

  static std::string normalize_label(const std::string& raw);

  static DatasetSchema builtin(const std::string& name);
  static bool is_builtin(const std::string& name);
  static DatasetSchema from_json(const io::ordered_json& j);
  static DatasetSchema from_json_file(const std::string& path);
  io::ordered_json to_json() const;
};

struct SensorSample {
  std::vector<double> values;  // one per feature column, all finite
};

// One labeled CSV row, in file order.
struct LabeledRow {
  SensorSample sample;
  std::string label;
  std::string subject;  // empty when schema has no subject column
};

struct LabeledWindow {
  std::string window_id;
  std::vector<SensorSample> samples;  // length == configured window length
  std::string label;
  std::string source_dataset;
  std::size_t row_begin = 0;  // [row_begin, row_end) in the source stream
  std::size_t row_end = 0;
  std::string subject;
};

enum class WindowPolicy { SameLabelOnly, MajorityLabel };

std::string to_string(WindowPolicy p);
WindowPolicy window_policy_from_string(const std::string& s);

struct SegmentStats {
  std::size_t input_samples = 0;
  std::size_t windows = 0;
  std::size_t discarded_samples = 0;  // trailing partials + policy discards
};

// Per-activity windows reserved for prompting; disjoint (by window_id) from
// whatever remains for evaluation.
struct ExamplePool {
  std::map<std::string, std::vector<LabeledWindow>> by_activity;
  int per_class = 0;

  std::size_t total() const;
};

std::vector<LabeledRow> load_dataset(const std::string& path, const DatasetSchema& schema);

std::vector<LabeledWindow> segment(const std::vector<LabeledRow>& rows,
                                   const DatasetSchema& schema, int window_len,
                                   WindowPolicy policy, SegmentStats* stats = nullptr);

// label_set, when given, makes the construction fail for activities with no
// windows at all (otherwise only activities present in the input are checked).
std::pair<ExamplePool, std::vector<LabeledWindow>> build_example_pool(
    const std::vector<LabeledWindow>& windows, int per_class, std::uint64_t seed,
    const std::vector<std::string>* label_set = nullptr);

io::ordered_json window_to_json(const LabeledWindow& w);
LabeledWindow window_from_json(const io::ordered_json& j);

void write_windows_jsonl(const std::string& path, const std::vector<LabeledWindow>& windows);
std::vector<LabeledWindow> read_windows_jsonl(const std::string& path);

}  // namespace pg
