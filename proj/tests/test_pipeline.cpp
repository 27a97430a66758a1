#include <doctest.h>

#include <set>

#include "poisonguard/errors.hpp"
#include "poisonguard/pipeline.hpp"
#include "poisonguard/rng.hpp"

using namespace pg;

namespace {

struct Fixture {
  DatasetSchema schema = DatasetSchema::builtin("MotionSense");
  std::vector<LabeledWindow> windows;  // reported labels already applied
  std::vector<PoisonRecord> records;
  ExamplePool pool;

  RunConfig config(BackendKind kind = BackendKind::MockScripted) {
    RunConfig c;
    c.run_id = "test";
    c.schema = schema;
    c.shot = ShotSpec::zero();
    c.backend.kind = kind;
    c.backend.script_path = "unused";
    c.backend.retry = {1, 0.001, 2.0};
    c.eval_mode = records.size() == windows.size() ? EvalMode::PoisonedOnly : EvalMode::Mixed;
    c.seed = 1;
    c.prompt_template = PromptTemplate::default_for(schema, ShotMode::Zero);
    return c;
  }
};

LabeledWindow simple_window(const DatasetSchema& schema, const std::string& id,
                            const std::string& reported) {
  LabeledWindow w;
  w.window_id = id;
  w.label = reported;
  w.source_dataset = schema.name;
  for (int i = 0; i < 3; ++i) {
    SensorSample s;
    s.values.assign(schema.feature_count(), 0.25 * i);
    w.samples.push_back(std::move(s));
  }
  return w;
}

Fixture poisoned_fixture(std::size_t n) {
  Fixture f;
  const auto& labels = f.schema.label_set;
  for (std::size_t i = 0; i < n; ++i) {
    std::string truth = labels[i % labels.size()];
    std::string flipped = labels[(i + 1) % labels.size()];
    f.windows.push_back(simple_window(f.schema, "w" + std::to_string(i), flipped));
    f.records.push_back({"w" + std::to_string(i), truth, flipped, AttackStrategy::Targeted});
  }
  return f;
}

io::ordered_json perfect_script(const Fixture& f) {
  io::ordered_json script;
  for (const auto& r : f.records)
    script[r.window_id] = "POISONED: yes\nCORRECT_LABEL: " + r.true_label;
  return script;
}

}  // namespace

TEST_CASE("a perfect scripted backend sanitizes everything") {
  Fixture f = poisoned_fixture(10);
  MockScriptedBackend mock(perfect_script(f));
  RunResult result = run(f.config(), f.windows, f.records, f.pool, mock);

  CHECK(result.ledger.size() == 10);
  CHECK(result.sanitized.size() == 10);
  CHECK(result.backend_failures == 0);
  for (const auto& e : result.ledger) CHECK(e.outcome == Outcome::CorrectSanitize);
  for (const auto& s : result.sanitized) CHECK(s.provenance == Provenance::Sanitized);
  CHECK(result.remaining_poisoned_from_provenance(f.records) == 0);

  auto counts = result.counts_from_outcomes();
  CHECK(counts.tp == 10);
  CHECK(detection_accuracy(counts) == 1.0);
  CHECK(counts == result.pipeline_counts);
}

TEST_CASE("a backend that never flags anything leaves all poison in place") {
  Fixture f = poisoned_fixture(8);
  io::ordered_json script;
  script["default"] = "POISONED: no";
  MockScriptedBackend mock(script);
  RunResult result = run(f.config(), f.windows, f.records, f.pool, mock);

  auto counts = result.counts_from_outcomes();
  CHECK(counts.fn == 8);
  CHECK(detection_accuracy(counts) == 0.0);
  auto p = prob_remains_poisoned(counts, result.sanitization_counts());
  REQUIRE(p);
  CHECK(p->as_printed == 1.0);
  CHECK(result.remaining_poisoned_from_provenance(f.records) == 8);
  for (const auto& s : result.sanitized) {
    CHECK(s.provenance == Provenance::LeftPoisoned);
    CHECK(s.final_label != "");  // reported label kept, never dropped
  }
}

TEST_CASE("provenance identity holds under mixed outcomes") {
  Fixture f = poisoned_fixture(6);
  // Two clean windows join the evaluated set.
  f.windows.push_back(simple_window(f.schema, "c0", "Walking"));
  f.windows.push_back(simple_window(f.schema, "c1", "Sitting"));

  io::ordered_json script;
  script[f.records[0].window_id] =
      "POISONED: yes\nCORRECT_LABEL: " + f.records[0].true_label;         // correct
  script[f.records[1].window_id] = "POISONED: yes\nCORRECT_LABEL: Jogging";  // wrong single
  script[f.records[2].window_id] =
      "POISONED: yes\nCORRECT_LABEL: Sitting/Standing";                   // ambiguous
  script[f.records[3].window_id] = "POISONED: no";                        // miss
  script[f.records[4].window_id] = "unintelligible носенсе";              // unparseable
  script[f.records[5].window_id] = "POISONED: yes\nCORRECT_LABEL: N/A";   // no correction
  script["c0"] = "POISONED: yes\nCORRECT_LABEL: Jogging";                 // false alarm altered
  script["c1"] = "POISONED: yes\nCORRECT_LABEL: Sitting";                 // false alarm preserved

  MockScriptedBackend mock(script);
  RunConfig config = f.config();
  config.eval_mode = EvalMode::Mixed;
  RunResult result = run(config, f.windows, f.records, f.pool, mock);

  auto counts = result.counts_from_outcomes();
  auto sanit = result.sanitization_counts();
  CHECK(counts.tp == 4);
  CHECK(counts.fn == 2);  // the miss and the unparseable response
  CHECK(counts.fp == 2);
  CHECK(counts.tn == 0);
  CHECK(sanit.cs_tp == 1);
  CHECK(sanit.cs_fp == 1);
  CHECK(counts == result.pipeline_counts);

  // Wrong rewrite of f.records[1] is recorded as a rewrite, and still counts
  // as remaining poison.
  bool saw_wrong_rewrite = false;
  for (const auto& s : result.sanitized) {
    if (s.window_id == f.records[1].window_id) {
      CHECK(s.provenance == Provenance::Sanitized);
      CHECK(s.to_label == "Jogging");
      saw_wrong_rewrite = true;
    }
  }
  CHECK(saw_wrong_rewrite);

  std::size_t formula = remaining_poisoned(counts, sanit);
  CHECK(result.remaining_poisoned_from_provenance(f.records) == formula);
  CHECK(formula == 2 + (4 - 1) + (2 - 1));
}

TEST_CASE("provenance rewrites always land inside the label set") {
  Fixture f = poisoned_fixture(3);
  io::ordered_json script;
  script[f.records[0].window_id] = "POISONED: yes\nCORRECT_LABEL: Lying Down";  // out of set
  script[f.records[1].window_id] =
      "POISONED: yes\nCORRECT_LABEL: " + f.records[1].true_label;
  script[f.records[2].window_id] = "POISONED: no";
  MockScriptedBackend mock(script);
  RunResult result = run(f.config(), f.windows, f.records, f.pool, mock);

  std::set<std::string> label_set(f.schema.label_set.begin(), f.schema.label_set.end());
  for (const auto& s : result.sanitized) {
    CHECK(label_set.count(s.final_label) == 1);
    if (s.provenance == Provenance::Sanitized) {
      CHECK(s.from_label != s.to_label);
      CHECK(label_set.count(s.to_label) == 1);
    }
  }
  // The out-of-set correction cannot be applied: window keeps its reported
  // label and stays poisoned.
  CHECK(result.sanitized[0].provenance == Provenance::LeftPoisoned);
  CHECK(result.ledger[0].outcome == Outcome::WrongSanitize);
}

TEST_CASE("per-window backend failures are ledgered, not fatal") {
  Fixture f = poisoned_fixture(5);
  io::ordered_json script;
  for (std::size_t i = 0; i < f.records.size(); ++i) {
    if (i == 2) continue;  // no entry, no default: ScriptMiss for w2
    script[f.records[i].window_id] =
        "POISONED: yes\nCORRECT_LABEL: " + f.records[i].true_label;
  }
  MockScriptedBackend mock(script);
  RunResult result = run(f.config(), f.windows, f.records, f.pool, mock);

  CHECK(result.ledger.size() == 5);
  CHECK(result.backend_failures == 1);
  CHECK(result.sanitized.size() == 4);  // conservation minus failures
  CHECK(result.exchanges.size() == 4);
  CHECK(result.ledger[2].backend_failure);
  CHECK(result.counts_from_outcomes().scored() == 4);
}

TEST_CASE("poisoned-only mode rejects windows without records") {
  Fixture f = poisoned_fixture(2);
  f.windows.push_back(simple_window(f.schema, "stray", "Walking"));
  io::ordered_json script;
  script["default"] = "POISONED: no";
  MockScriptedBackend mock(script);
  RunConfig config = f.config();
  config.eval_mode = EvalMode::PoisonedOnly;
  CHECK_THROWS_AS(run(config, f.windows, f.records, f.pool, mock), DataError);
}

TEST_CASE("precondition failures surface from worker threads as exceptions") {
  Fixture f = poisoned_fixture(8);
  io::ordered_json script;
  script["default"] = "POISONED: no";
  MockScriptedBackend mock(script);
  RunConfig config = f.config();
  config.shot = ShotSpec::one();  // pool is empty: building any prompt throws
  config.backend.max_concurrency = 4;
  CHECK_THROWS_AS(run(config, f.windows, f.records, f.pool, mock), InsufficientExamples);
}

TEST_CASE("concurrent fan-out preserves ledger order and content") {
  Fixture f = poisoned_fixture(24);
  MockScriptedBackend mock(perfect_script(f));
  RunConfig sequential = f.config();
  RunResult base = run(sequential, f.windows, f.records, f.pool, mock);

  RunConfig parallel = f.config();
  parallel.backend.max_concurrency = 4;
  RunResult fanned = run(parallel, f.windows, f.records, f.pool, mock);

  REQUIRE(base.ledger.size() == fanned.ledger.size());
  for (std::size_t i = 0; i < base.ledger.size(); ++i) {
    CHECK(base.ledger[i].to_json() == fanned.ledger[i].to_json());
  }
  CHECK(base.counts_from_outcomes() == fanned.counts_from_outcomes());
}

TEST_CASE("cache replay reuses the original exchange cost") {
  Fixture f = poisoned_fixture(2);
  // Same sensor payload and reported label => identical prompts for both
  // windows, so the second hits the cache.
  f.windows[1] = f.windows[0];
  f.windows[1].window_id = "w1";
  f.records[1] = f.records[0];
  f.records[1].window_id = "w1";

  auto path = std::filesystem::temp_directory_path() / "pg_run_cache.jsonl";
  std::filesystem::remove(path);
  ExchangeCache cache(path.string());
  io::ordered_json script;
  script[f.records[0].window_id] = io::ordered_json{
      {"response", "POISONED: yes\nCORRECT_LABEL: " + f.records[0].true_label},
      {"latency_seconds", 2.5}};
  MockScriptedBackend mock(script);  // only w0 scripted: a real miss would throw
  RunResult result = run(f.config(), f.windows, f.records, f.pool, mock, &cache);

  REQUIRE(result.exchanges.size() == 2);
  CHECK(result.exchanges[0].window_id == "w0");
  CHECK(result.exchanges[1].window_id == "w1");
  CHECK(result.exchanges[1].response_text == result.exchanges[0].response_text);
  CHECK(result.exchanges[1].latency_seconds == 2.5);  // original exchange stands
  CHECK(cache.size() == 1);
}

TEST_CASE("run invariants hold under arbitrary response mixes") {
  DatasetSchema schema = DatasetSchema::builtin("MotionSense");
  rng::Stream stream(424242);
  const auto& labels = schema.label_set;

  for (int trial = 0; trial < 25; ++trial) {
    Fixture f;
    std::size_t n = 4 + stream.bounded(30);
    io::ordered_json script;
    for (std::size_t i = 0; i < n; ++i) {
      std::string id = "w" + std::to_string(i);
      std::string truth = labels[stream.bounded(labels.size())];
      bool poisoned = stream.bounded(4) != 0;  // mostly poisoned, some clean
      std::string reported = truth;
      if (poisoned) {
        while (reported == truth) reported = labels[stream.bounded(labels.size())];
        f.records.push_back({id, truth, reported, AttackStrategy::Random});
      }
      f.windows.push_back(simple_window(schema, id, reported));

      std::string other = labels[stream.bounded(labels.size())];
      switch (stream.bounded(7)) {
        case 0: script[id] = "POISONED: yes\nCORRECT_LABEL: " + truth; break;
        case 1: script[id] = "POISONED: yes\nCORRECT_LABEL: " + other; break;
        case 2:
          script[id] = "POISONED: yes\nCORRECT_LABEL: Sitting/Standing";
          break;
        case 3: script[id] = "POISONED: yes\nCORRECT_LABEL: Lying Down"; break;
        case 4: script[id] = "POISONED: yes\nCORRECT_LABEL: N/A"; break;
        case 5: script[id] = "POISONED: no"; break;
        default: script[id] = "???"; break;
      }
    }

    MockScriptedBackend mock(script);
    RunConfig config = f.config();
    config.eval_mode = EvalMode::Mixed;
    RunResult result = run(config, f.windows, f.records, f.pool, mock);

    // Outcome partition covers every evaluated window.
    ConfusionCounts counts = result.counts_from_outcomes();
    CHECK(counts.scored() == n);
    CHECK(result.sanitized.size() == n);

    // Detection tallies agree across the two independent code paths.
    CHECK(counts == result.pipeline_counts);

    // Remaining-poison formula equals the provenance recount, exactly.
    SanitizationCounts sanit = result.sanitization_counts();
    CHECK(result.remaining_poisoned_from_provenance(f.records) ==
          remaining_poisoned(counts, sanit));

    // Provenance soundness: rewrites record from=reported, to in label set.
    std::set<std::string> label_set(labels.begin(), labels.end());
    std::map<std::string, std::string> reported_by_id;
    for (const auto& w : f.windows) reported_by_id[w.window_id] = w.label;
    for (const auto& s : result.sanitized) {
      if (s.provenance == Provenance::Sanitized) {
        CHECK(s.from_label == reported_by_id.at(s.window_id));
        CHECK(label_set.count(s.to_label) == 1);
        CHECK(s.final_label == s.to_label);
      } else {
        CHECK(s.final_label == reported_by_id.at(s.window_id));
      }
    }
  }
}

TEST_CASE("ledger and exchange logs round-trip through jsonl") {
  Fixture f = poisoned_fixture(4);
  MockScriptedBackend mock(perfect_script(f));
  RunResult result = run(f.config(), f.windows, f.records, f.pool, mock);

  auto dir = std::filesystem::temp_directory_path();
  write_ledger_jsonl((dir / "pg_ledger.jsonl").string(), result.ledger);
  auto ledger = read_ledger_jsonl((dir / "pg_ledger.jsonl").string());
  REQUIRE(ledger.size() == result.ledger.size());
  for (std::size_t i = 0; i < ledger.size(); ++i)
    CHECK(ledger[i].to_json() == result.ledger[i].to_json());

  write_exchanges_jsonl((dir / "pg_exchanges.jsonl").string(), result.exchanges);
  auto exchanges = read_exchanges_jsonl((dir / "pg_exchanges.jsonl").string());
  REQUIRE(exchanges.size() == result.exchanges.size());
  CHECK(exchanges[0].to_json() == result.exchanges[0].to_json());
}
