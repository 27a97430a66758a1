#pragma once

#include <string>
#include <vector>

#include "poisonguard/dataset.hpp"

namespace pg {

enum class ShotMode { Zero, One, Few };

struct ShotSpec {
  ShotMode mode = ShotMode::Zero;
  int k = 3;  // examples per activity in Few mode

  int shots_per_class() const;
  std::string name() const;  // "zero", "one", "few"

  static ShotSpec zero() { return {ShotMode::Zero, 3}; }
  static ShotSpec one() { return {ShotMode::One, 3}; }
  static ShotSpec few(int k = 3) { return {ShotMode::Few, k}; }
  static ShotSpec from_name(const std::string& name, int k = 3);
};

// Role-play + step-by-step prompt skeleton. The skeleton text carries five
// placeholders, each exactly once: {{ROLE}}, {{EXAMPLES}}, {{QUERY_DATA}},
// {{REPORTED_LABEL}}, {{ANSWER_FORMAT}}. Skeletons live in editable files
// (one per dataset and shot mode); the built-in defaults are reconstructions
// of the published template structure, not verbatim copies.
struct PromptTemplate {
  std::string role_preamble;
  std::string task_instruction;
  std::string reasoning_directive;
  std::string answer_format_directive;
  std::string skeleton;

  void validate() const;  // every placeholder present exactly once

  static PromptTemplate default_for(const DatasetSchema& schema, ShotMode mode);
  static PromptTemplate load(const std::string& path);
  void save(const std::string& path) const;
};

struct PromptInstance {
  std::string text;
  std::string window_id;
  ShotSpec shot;
  std::size_t char_count = 0;  // Unicode scalar values, not bytes
  std::string reported_label;
};

// Header line with feature names, then one comma-separated line per sample at
// a fixed number of significant digits. precision must be in [3, 12].
std::string render_window_text(const LabeledWindow& window, const DatasetSchema& schema,
                               int precision);

PromptInstance build_prompt(const PromptTemplate& tpl, const ShotSpec& shot,
                            const ExamplePool& pool, const LabeledWindow& query,
                            const std::string& reported_label, const DatasetSchema& schema,
                            int precision = 6);

// Portion of a rendered prompt after the query marker (the whole text when
// the marker is absent). The reported label appears exactly once in here and
// the true label never does.
std::string_view query_section(std::string_view prompt_text);

}  // namespace pg
