#include <doctest.h>

#include <charconv>

#include "poisonguard/errors.hpp"
#include "poisonguard/prompt.hpp"
#include "poisonguard/rng.hpp"
#include "poisonguard/text.hpp"

using namespace pg;

namespace {

LabeledWindow make_window(const DatasetSchema& schema, const std::string& label,
                          std::size_t samples, double scale, const std::string& id) {
  LabeledWindow w;
  w.window_id = id;
  w.label = label;
  w.source_dataset = schema.name;
  for (std::size_t i = 0; i < samples; ++i) {
    SensorSample s;
    for (std::size_t c = 0; c < schema.feature_count(); ++c)
      s.values.push_back(scale * (static_cast<double>(i) + 0.1 * static_cast<double>(c)));
    w.samples.push_back(std::move(s));
  }
  return w;
}

ExamplePool pool_with(const DatasetSchema& schema, int per_class) {
  ExamplePool pool;
  pool.per_class = per_class;
  std::size_t id = 0;
  for (const auto& label : schema.label_set) {
    for (int i = 0; i < per_class; ++i)
      pool.by_activity[label].push_back(
          make_window(schema, label, 2, 0.5, "ex" + std::to_string(id++)));
  }
  return pool;
}

}  // namespace

TEST_CASE("window text renders a header plus one line per sample") {
  DatasetSchema wisdm = DatasetSchema::builtin("WISDM");
  LabeledWindow w = make_window(wisdm, "Walking", 1, 0.0, "w0");
  std::string rendered = render_window_text(w, wisdm, 3);
  CHECK(rendered == "acc.x,acc.y,acc.z\n0.000,0.000,0.000");

  LabeledWindow big = make_window(DatasetSchema::builtin("MotionSense"), "Walking", 100, 1.0,
                                  "w1");
  std::string lines = render_window_text(big, DatasetSchema::builtin("MotionSense"), 6);
  CHECK(text::count_occurrences(lines, "\n") == 100);  // header + 100 rows
}

TEST_CASE("rendered values parse back within the precision bound") {
  DatasetSchema wisdm = DatasetSchema::builtin("WISDM");
  rng::Stream stream(11);
  for (int precision : {3, 6, 12}) {
    double tolerance = std::pow(10.0, 1 - precision);
    LabeledWindow w;
    w.window_id = "w";
    w.label = "Walking";
    for (int i = 0; i < 20; ++i) {
      SensorSample s;
      for (int c = 0; c < 3; ++c) s.values.push_back(stream.uniform() * 40.0 - 20.0);
      w.samples.push_back(std::move(s));
    }
    std::string rendered = render_window_text(w, wisdm, precision);
    auto lines = text::split(rendered, '\n');
    REQUIRE(lines.size() == 21);
    for (std::size_t li = 1; li < lines.size(); ++li) {
      auto cells = text::split(lines[li], ',');
      REQUIRE(cells.size() == 3);
      for (std::size_t c = 0; c < 3; ++c) {
        double parsed = 0;
        auto [ptr, ec] = std::from_chars(cells[c].data(), cells[c].data() + cells[c].size(),
                                         parsed);
        REQUIRE(ec == std::errc());
        double truth = w.samples[li - 1].values[c];
        CHECK(std::abs(parsed - truth) <= std::abs(truth) * tolerance + 1e-300);
      }
    }
  }
  CHECK_THROWS_AS(render_window_text(make_window(wisdm, "Walking", 1, 0.0, "x"), wisdm, 2),
                  ConfigError);
}

TEST_CASE("shot modes embed the right number of example blocks") {
  DatasetSchema ms = DatasetSchema::builtin("MotionSense");
  ExamplePool pool = pool_with(ms, 3);
  LabeledWindow query = make_window(ms, "Standing", 4, 1.0, "q1");

  auto count_blocks = [](const PromptInstance& p) {
    return text::count_occurrences(p.text, "(activity:");
  };

  PromptTemplate tpl = PromptTemplate::default_for(ms, ShotMode::Zero);
  PromptInstance zero = build_prompt(tpl, ShotSpec::zero(), pool, query, "Sitting", ms);
  CHECK(count_blocks(zero) == 0);

  tpl = PromptTemplate::default_for(ms, ShotMode::One);
  PromptInstance one = build_prompt(tpl, ShotSpec::one(), pool, query, "Sitting", ms);
  CHECK(count_blocks(one) == 6);

  tpl = PromptTemplate::default_for(ms, ShotMode::Few);
  PromptInstance few = build_prompt(tpl, ShotSpec::few(3), pool, query, "Sitting", ms);
  CHECK(count_blocks(few) == 18);

  // Character cost grows strictly with shots.
  CHECK(zero.char_count < one.char_count);
  CHECK(one.char_count < few.char_count);

  // Determinism: same inputs, byte-identical text.
  PromptInstance again = build_prompt(tpl, ShotSpec::few(3), pool, query, "Sitting", ms);
  CHECK(again.text == few.text);

  // char_count is the exact scalar count of the text.
  CHECK(few.char_count == text::utf8_scalar_count(few.text));
}

TEST_CASE("query section names the reported label exactly once and never the truth") {
  DatasetSchema ms = DatasetSchema::builtin("MotionSense");
  ExamplePool pool = pool_with(ms, 1);
  PromptTemplate tpl = PromptTemplate::default_for(ms, ShotMode::One);

  // Every ordered (truth, reported) pair, both shot modes.
  for (const auto& truth : ms.label_set) {
    LabeledWindow query = make_window(ms, truth, 4, 1.0, "q1");
    for (const auto& reported : ms.label_set) {
      if (reported == truth) continue;
      for (const ShotSpec& shot : {ShotSpec::zero(), ShotSpec::one()}) {
        PromptInstance p = build_prompt(tpl, shot, pool, query, reported, ms);
        std::string_view query_part = query_section(p.text);
        CHECK(text::count_occurrences(query_part, reported) == 1);
        CHECK(text::count_occurrences(query_part, truth) == 0);  // truth never leaks
      }
    }
  }
}

TEST_CASE("insufficient pool is rejected up front") {
  DatasetSchema ms = DatasetSchema::builtin("MotionSense");
  ExamplePool pool = pool_with(ms, 1);
  LabeledWindow query = make_window(ms, "Standing", 4, 1.0, "q1");
  PromptTemplate tpl = PromptTemplate::default_for(ms, ShotMode::Few);
  CHECK_THROWS_AS(build_prompt(tpl, ShotSpec::few(3), pool, query, "Sitting", ms),
                  InsufficientExamples);
}

TEST_CASE("template placeholders validated exactly once") {
  PromptTemplate tpl = PromptTemplate::default_for(DatasetSchema::builtin("HHAR"),
                                                   ShotMode::Zero);
  CHECK_NOTHROW(tpl.validate());
  PromptTemplate broken = tpl;
  broken.skeleton += "{{QUERY_DATA}}";
  CHECK_THROWS_AS(broken.validate(), ConfigError);
  broken = tpl;
  broken.skeleton = text::replace_all(broken.skeleton, "{{REPORTED_LABEL}}", "");
  CHECK_THROWS_AS(broken.validate(), ConfigError);
}

TEST_CASE("templates load from files") {
  PromptTemplate tpl = PromptTemplate::default_for(DatasetSchema::builtin("WISDM"),
                                                   ShotMode::Few);
  auto path = std::filesystem::temp_directory_path() / "pg_template.txt";
  tpl.save(path.string());
  PromptTemplate loaded = PromptTemplate::load(path.string());
  CHECK(loaded.skeleton == tpl.skeleton);
}
