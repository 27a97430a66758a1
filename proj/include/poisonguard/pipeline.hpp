#pragma once

#include <optional>
#include <string>
#include <vector>

#include "poisonguard/llm.hpp"
#include "poisonguard/metrics.hpp"
#include "poisonguard/verdict.hpp"

namespace pg {

enum class EvalMode { PoisonedOnly, Mixed };

std::string to_string(EvalMode m);
EvalMode eval_mode_from_string(const std::string& s);

struct RunConfig {
  std::string run_id;
  DatasetSchema schema;
  ShotSpec shot;
  BackendDescriptor backend;
  WindowPolicy policy = WindowPolicy::SameLabelOnly;
  EvalMode eval_mode = EvalMode::PoisonedOnly;
  std::uint64_t seed = 0;
  int precision = 6;
  PromptTemplate prompt_template;
};

enum class Provenance {
  KeptOriginal,  // kept and the truth is clean
  Sanitized,     // label rewritten to the verdict's suggestion
  LeftPoisoned   // kept although the truth says poisoned
};

std::string to_string(Provenance p);

struct SanitizedEntry {
  std::string window_id;
  std::string final_label;
  Provenance provenance = Provenance::KeptOriginal;
  std::string from_label;  // set when provenance == Sanitized
  std::string to_label;

  io::ordered_json to_json() const;
};

struct LedgerEntry {
  std::string window_id;
  bool truth_poisoned = false;
  std::string true_label;
  std::string reported_label;
  Detection detection = Detection::Unparseable;
  Suggestion suggestion;
  Outcome outcome = Outcome::Unparseable;
  bool backend_failure = false;
  std::string failure_reason;

  io::ordered_json to_json() const;
};

// Aggregations shared by the live pipeline and offline re-scoring of stored
// ledgers; backend failures are skipped.
ConfusionCounts counts_from_ledger(const std::vector<LedgerEntry>& ledger);
SanitizationCounts sanitization_from_ledger(const std::vector<LedgerEntry>& ledger);
std::vector<CostEntry> cost_entries_from_exchanges(const std::vector<LlmExchange>& exchanges);

struct RunResult {
  std::vector<SanitizedEntry> sanitized;  // one per evaluated window minus failures
  std::vector<LedgerEntry> ledger;        // one per window, input order
  std::vector<LlmExchange> exchanges;     // one per successfully queried window

  // Tallied directly from detection flags during the run, independently of
  // the outcome classification; the metrics module recomputes the same
  // counts from outcomes and the two must agree.
  ConfusionCounts pipeline_counts;
  std::size_t backend_failures = 0;

  ConfusionCounts counts_from_outcomes() const { return counts_from_ledger(ledger); }
  SanitizationCounts sanitization_counts() const { return sanitization_from_ledger(ledger); }
  std::vector<CostEntry> cost_entries() const {
    return cost_entries_from_exchanges(exchanges);
  }

  // Windows still carrying a wrong label, derived from provenance records.
  // Matches the remaining-poison formula exactly, run by run.
  std::size_t remaining_poisoned_from_provenance(
      const std::vector<PoisonRecord>& records) const;
};

// Runs detection + sanitization over every window: build prompt, query the
// backend, parse, classify, and assemble the sanitized dataset. Per-window
// backend errors land in the ledger as failures; they never abort the run.
RunResult run(const RunConfig& config, const std::vector<LabeledWindow>& windows,
              const std::vector<PoisonRecord>& records, const ExamplePool& pool,
              Backend& backend, ExchangeCache* cache = nullptr);

void write_sanitized_jsonl(const std::string& path, const std::vector<SanitizedEntry>& entries);
void write_ledger_jsonl(const std::string& path, const std::vector<LedgerEntry>& entries);
std::vector<LedgerEntry> read_ledger_jsonl(const std::string& path);
void write_exchanges_jsonl(const std::string& path, const std::vector<LlmExchange>& exchanges);
std::vector<LlmExchange> read_exchanges_jsonl(const std::string& path);

}  // namespace pg
