#include <doctest.h>

#include <cmath>
#include <set>

#include "poisonguard/metrics.hpp"
#include "poisonguard/verdict.hpp"
#include "support/corpus.hpp"

using namespace pg;
using namespace pg::testsupport;

namespace {

const std::vector<std::string>& labels_for(const std::string& dataset) {
  static const std::map<std::string, std::vector<std::string>> by_name = {
      {"motionsense", DatasetSchema::builtin("MotionSense").label_set},
      {"hhar", DatasetSchema::builtin("HHAR").label_set},
      {"wisdm", DatasetSchema::builtin("WISDM").label_set},
  };
  return by_name.at(dataset);
}

struct Aggregate {
  ConfusionCounts counts;
  SanitizationCounts sanit;
};

// Scores one (dataset, shot, model) slice under the sessions' own marks,
// which is how the recorded aggregate scores were computed.
Aggregate aggregate_as_marked(const Corpus& corpus, const std::string& dataset,
                              const std::string& shot, const std::string& model) {
  Aggregate agg;
  for (const RecordedRow* row : corpus.select(dataset, shot)) {
    const RecordedCell& cell = row->by_model.at(model);
    if (!cell.detected) {
      agg.counts.fn++;
    } else {
      agg.counts.tp++;
      if (!cell.marked_wrong) agg.sanit.cs_tp++;
    }
  }
  return agg;
}

double round2(double v) { return std::round(v * 100.0) / 100.0; }

}  // namespace

TEST_CASE("classify reproduces the recorded correctness marks cell by cell") {
  Corpus corpus = load_corpus();
  std::set<std::string> conflicts;
  std::size_t cells = 0;

  for (const auto& table : corpus.tables) {
    const auto& label_set = labels_for(table.dataset);
    for (const auto& row : table.rows) {
      std::optional<PoisonRecord> truth =
          PoisonRecord{"w", row.actual, row.poisoned, AttackStrategy::Targeted};
      for (const auto& [model, cell] : row.by_model) {
        ++cells;
        Verdict verdict = parse_response(cell_response_text(cell), label_set);
        Outcome outcome = classify(verdict, truth, row.poisoned);
        bool computed_wrong = outcome != Outcome::CorrectSanitize;
        if (computed_wrong != cell.marked_wrong)
          conflicts.insert(conflict_key(table, row, model));
      }
    }
  }

  CHECK(cells == 540);  // 180 rows x 3 models
  // The recorded grids carry a handful of cells whose printed label text
  // contradicts their own correctness mark (transcription slips in the
  // source material). Everything else matches exactly, and the conflict set
  // must stay pinned to exactly those cells.
  std::set<std::string> expected;
  for (const auto& k : known_mark_text_conflicts()) expected.insert(k);
  CHECK(conflicts == expected);
}

TEST_CASE("detection flags alone reproduce the recorded accuracy cells") {
  Corpus corpus = load_corpus();
  auto acc = [&](const std::string& dataset, const std::string& shot,
                 const std::string& model) {
    Aggregate agg = aggregate_as_marked(corpus, dataset, shot, model);
    return detection_accuracy(agg.counts);
  };
  CHECK(round2(acc("motionsense", "zero", "gpt35")) == doctest::Approx(0.90));
  CHECK(acc("motionsense", "zero", "gpt4") == 1.0);
  CHECK(round2(acc("motionsense", "zero", "gemini")) == doctest::Approx(0.90));
  CHECK(round2(acc("hhar", "zero", "gpt35")) == doctest::Approx(0.83));
  CHECK(round2(acc("hhar", "zero", "gemini")) == doctest::Approx(0.93));
  CHECK(round2(acc("motionsense", "one", "gpt35")) == doctest::Approx(0.97));
}

TEST_CASE("marked-cell scoring reproduces the recorded aggregate SQ cells") {
  Corpus corpus = load_corpus();

  // The published summary's zero-shot sanitization quality is the correctly
  // sanitized share of the *detected* windows.
  auto sq = [&](const std::string& dataset, const std::string& shot,
                const std::string& model) {
    Aggregate agg = aggregate_as_marked(corpus, dataset, shot, model);
    auto v = sq_tp(agg.counts, agg.sanit);
    REQUIRE(v);
    return *v;
  };

  CHECK(std::abs(round2(sq("motionsense", "zero", "gpt35")) - 0.20) <= 0.02 + 1e-9);
  CHECK(std::abs(round2(sq("motionsense", "zero", "gpt4")) - 0.97) <= 0.02 + 1e-9);
  CHECK(std::abs(round2(sq("hhar", "zero", "gpt35")) - 0.28) <= 0.02 + 1e-9);
  CHECK(round2(sq("motionsense", "zero", "gemini")) == doctest::Approx(0.26));
  CHECK(round2(sq("hhar", "zero", "gemini")) == doctest::Approx(0.32));

  // One-shot: the two stronger models are perfect across all three datasets.
  for (const std::string dataset : {"motionsense", "hhar", "wisdm"}) {
    for (const std::string model : {"gpt4", "gemini"}) {
      Aggregate agg = aggregate_as_marked(corpus, dataset, "one", model);
      CHECK(detection_accuracy(agg.counts) == 1.0);
      CHECK(*sq_tp(agg.counts, agg.sanit) == 1.0);
    }
  }
}

TEST_CASE("assemble_report matches the recorded HHAR zero-shot row") {
  Corpus corpus = load_corpus();
  Aggregate agg = aggregate_as_marked(corpus, "hhar", "zero", "gpt35");
  MetricsReport report = assemble_report("golden", "gpt35", "HHAR", "zero", agg.counts,
                                         agg.sanit, 0, {}, 100, std::nullopt);
  CHECK(round2(report.accuracy) == doctest::Approx(0.83));
  REQUIRE(report.sq_tp_value);
  CHECK(round2(*report.sq_tp_value) == doctest::Approx(0.28));
}
