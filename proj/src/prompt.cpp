#include "poisonguard/prompt.hpp"

#include "poisonguard/errors.hpp"
#include "poisonguard/text.hpp"

namespace pg {

namespace {

constexpr const char* kQueryMarker = "### Query";

const char* kPlaceholders[] = {"{{ROLE}}", "{{EXAMPLES}}", "{{QUERY_DATA}}",
                               "{{REPORTED_LABEL}}", "{{ANSWER_FORMAT}}"};

std::string sensor_blurb(const DatasetSchema& schema) {
  std::string n = text::lower(schema.name);
  if (n == "motionsense")
    return "a smartphone carried in the user's front trouser pocket, reporting device "
           "attitude, gravity, rotation rate, and user acceleration";
  if (n == "hhar")
    return "smartphone and smartwatch motion sensors, reporting accelerometer and "
           "gyroscope values along the x, y, and z axes";
  if (n == "wisdm")
    return "a smartphone accelerometer, reporting acceleration along the x, y, and z axes";
  return "a wearable motion sensor";
}

}  // namespace

int ShotSpec::shots_per_class() const {
  switch (mode) {
    case ShotMode::Zero: return 0;
    case ShotMode::One: return 1;
    case ShotMode::Few: return k;
  }
  return 0;
}

std::string ShotSpec::name() const {
  switch (mode) {
    case ShotMode::Zero: return "zero";
    case ShotMode::One: return "one";
    case ShotMode::Few: return "few";
  }
  return "zero";
}

ShotSpec ShotSpec::from_name(const std::string& name, int k) {
  std::string n = text::lower(text::trim(name));
  if (n == "zero") return zero();
  if (n == "one") return one();
  if (n == "few") return few(k);
  throw ConfigError("unknown shot mode: " + name);
}

void PromptTemplate::validate() const {
  for (const char* p : kPlaceholders) {
    std::size_t count = text::count_occurrences(skeleton, p);
    if (count != 1)
      throw ConfigError(std::string("template placeholder ") + p + " appears " +
                        std::to_string(count) + " times, expected exactly once");
  }
}

PromptTemplate PromptTemplate::default_for(const DatasetSchema& schema, ShotMode mode) {
  PromptTemplate t;
  t.role_preamble =
      "You are an expert analyst of wearable motion-sensor recordings for human "
      "activity recognition, with experience spotting tampered training data.";
  t.reasoning_directive =
      "Think step by step: describe the sensor pattern each candidate activity would "
      "produce, compare those patterns against the data, and only then conclude.";
  t.answer_format_directive =
      "After your reasoning, finish with exactly two lines:\n"
      "POISONED: yes or no\n"
      "CORRECT_LABEL: the true activity if POISONED is yes, otherwise N/A";

  std::string labels = text::join(schema.label_set, ", ");
  std::string features = text::join(schema.feature_columns, ", ");
  t.task_instruction =
      "You are given a window of consecutive readings from " + sensor_blurb(schema) +
      ". Each data line contains, in order: " + features +
      ". The possible activities are: " + labels +
      ". The window comes with a reported activity label that may have been "
      "maliciously flipped to a different activity.";
  if (mode != ShotMode::Zero) {
    t.task_instruction +=
        " Labeled reference windows recorded for each activity are provided below; "
        "use them as ground truth for what each activity looks like.";
  }

  t.skeleton =
      "{{ROLE}}\n\n" + t.task_instruction + "\n\n" + t.reasoning_directive +
      "\n\n{{EXAMPLES}}" + std::string(kQueryMarker) +
      "\nThe window below was recorded with the reported activity label "
      "\"{{REPORTED_LABEL}}\". Judge whether the readings are consistent with that "
      "label. If they are not, state which activity the readings actually show.\n\n"
      "{{QUERY_DATA}}\n\n{{ANSWER_FORMAT}}\n";
  t.validate();
  return t;
}

PromptTemplate PromptTemplate::load(const std::string& path) {
  PromptTemplate t = default_for(DatasetSchema::builtin("MotionSense"), ShotMode::Zero);
  t.skeleton = io::read_file(path);
  t.validate();
  return t;
}

void PromptTemplate::save(const std::string& path) const {
  io::atomic_write(path, skeleton);
}

std::string render_window_text(const LabeledWindow& window, const DatasetSchema& schema,
                               int precision) {
  if (precision < 3 || precision > 12)
    throw ConfigError("serialization precision must be in [3, 12]");
  std::string out = text::join(schema.feature_columns, ",");
  out += '\n';
  for (const auto& sample : window.samples) {
    for (std::size_t i = 0; i < sample.values.size(); ++i) {
      if (i) out += ',';
      out += text::format_significant(sample.values[i], precision);
    }
    out += '\n';
  }
  if (!out.empty() && out.back() == '\n') out.pop_back();
  return out;
}

namespace {

std::string render_examples(const ShotSpec& shot, const ExamplePool& pool,
                            const DatasetSchema& schema, int precision) {
  int per_class = shot.shots_per_class();
  if (per_class == 0) return "";

  std::string out = "### Labeled examples\n";
  int n = 0;
  for (const auto& activity : schema.label_set) {
    auto it = pool.by_activity.find(activity);
    std::size_t have = it == pool.by_activity.end() ? 0 : it->second.size();
    if (have < static_cast<std::size_t>(per_class))
      throw InsufficientExamples(activity, have, static_cast<std::size_t>(per_class));
    for (int i = 0; i < per_class; ++i) {
      ++n;
      out += "\nExample " + std::to_string(n) + " (activity: " + activity + ")\n";
      out += render_window_text(it->second[static_cast<std::size_t>(i)], schema, precision);
      out += '\n';
    }
  }
  out += '\n';
  return out;
}

}  // namespace

PromptInstance build_prompt(const PromptTemplate& tpl, const ShotSpec& shot,
                            const ExamplePool& pool, const LabeledWindow& query,
                            const std::string& reported_label, const DatasetSchema& schema,
                            int precision) {
  tpl.validate();
  std::string body = tpl.skeleton;
  body = text::replace_all(std::move(body), "{{ROLE}}", tpl.role_preamble);
  body = text::replace_all(std::move(body), "{{ANSWER_FORMAT}}", tpl.answer_format_directive);
  body = text::replace_all(std::move(body), "{{EXAMPLES}}",
                           render_examples(shot, pool, schema, precision));
  body = text::replace_all(std::move(body), "{{REPORTED_LABEL}}", reported_label);
  body = text::replace_all(std::move(body), "{{QUERY_DATA}}",
                           render_window_text(query, schema, precision));

  PromptInstance inst;
  inst.text = std::move(body);
  inst.window_id = query.window_id;
  inst.shot = shot;
  inst.char_count = text::utf8_scalar_count(inst.text);
  inst.reported_label = reported_label;
  return inst;
}

std::string_view query_section(std::string_view prompt_text) {
  std::size_t pos = prompt_text.rfind(kQueryMarker);
  if (pos == std::string_view::npos) return prompt_text;
  return prompt_text.substr(pos);
}

}  // namespace pg
