#pragma once

#include <optional>
#include <string>
#include <vector>

#include "poisonguard/jsonl.hpp"

namespace pg {

struct ConfusionCounts {
  std::size_t tp = 0;  // poisoned, flagged
  std::size_t tn = 0;  // clean, not flagged
  std::size_t fp = 0;  // clean, flagged
  std::size_t fn = 0;  // poisoned, not flagged

  std::size_t scored() const { return tp + tn + fp + fn; }
  bool operator==(const ConfusionCounts&) const = default;
};

struct SanitizationCounts {
  std::size_t cs_tp = 0;  // true positives corrected to the true label
  std::size_t cs_fp = 0;  // false positives left unchanged

  bool operator==(const SanitizationCounts&) const = default;
};

// (TP + TN) / (TP + TN + FP + FN). Throws EmptyRun on a zero denominator.
// Under poisoned-only evaluation this degenerates to TP / (TP + FN).
double detection_accuracy(const ConfusionCounts& c);

// Undefined metrics (zero denominators) are reported as absent, never 0.
std::optional<double> sq_tp(const ConfusionCounts& c, const SanitizationCounts& s);
std::optional<double> sq_fp(const ConfusionCounts& c, const SanitizationCounts& s);
std::optional<double> sq_overall(const ConfusionCounts& c, const SanitizationCounts& s);

// FN + (1 - CS_TP/TP)*TP + (1 - CS_FP/FP)*FP, each bracketed term 0 when its
// denominator is 0. Always the integer FN + (TP - CS_TP) + (FP - CS_FP).
std::size_t remaining_poisoned(const ConfusionCounts& c, const SanitizationCounts& s);

// Probability that a poisoned sample is still poisoned after the defense.
// The published expression carries the altered-FP term in its numerator while
// dividing by FN + TP; both that as-printed value and a variant restricted to
// poisoned-truth terms are reported, labeled, rather than silently merged.
struct RemainProbability {
  double as_printed = 0.0;        // (FN + (TP-CS_TP) + (FP-CS_FP)) / (FN + TP)
  double truth_restricted = 0.0;  // (FN + (TP-CS_TP)) / (FN + TP)
};
std::optional<RemainProbability> prob_remains_poisoned(const ConfusionCounts& c,
                                                       const SanitizationCounts& s);

struct CostEntry {
  std::size_t prompt_chars = 0;
  std::size_t response_chars = 0;
  double latency_seconds = 0.0;
};

struct CommCost {
  std::size_t total_prompt_chars = 0;
  std::size_t total_response_chars = 0;
  std::size_t total_chars = 0;  // sum over exchanges of (c_p + c_r)
  std::size_t exchanges = 0;    // m
  std::size_t window_len = 0;   // W
  std::size_t total_samples = 0;  // N = m * W
};

CommCost comm_cost(const std::vector<CostEntry>& ledger, std::size_t window_len);

struct LatencyStats {
  double mean = 0.0;
  double median = 0.0;
  double max = 0.0;
  double total = 0.0;
};

// Absent for an empty run.
std::optional<LatencyStats> latency_stats(const std::vector<CostEntry>& ledger);

struct PrivacyParams {
  double p = 0.0;       // per-interaction interception probability
  std::size_t m = 0;    // interaction count
};

// P_leak = 1 - (1 - p)^m. Monotone nondecreasing in both arguments.
double privacy_leak(const PrivacyParams& params);

struct MetricsReport {
  std::string run_id;
  std::string backend;
  std::string dataset;
  std::string shot_mode;

  ConfusionCounts counts;
  SanitizationCounts sanitization;
  std::size_t backend_failures = 0;

  double accuracy = 0.0;
  std::optional<double> sq_tp_value;
  std::optional<double> sq_fp_value;
  std::optional<double> sq_overall_value;
  std::size_t remaining = 0;
  std::optional<RemainProbability> remain_probability;

  CommCost comm;
  std::optional<LatencyStats> latency;
  std::optional<PrivacyParams> privacy;
  std::optional<double> privacy_leak_value;

  io::ordered_json to_json() const;
  static MetricsReport from_json(const io::ordered_json& j);
};

MetricsReport assemble_report(const std::string& run_id, const std::string& backend,
                              const std::string& dataset, const std::string& shot_mode,
                              const ConfusionCounts& counts, const SanitizationCounts& sanit,
                              std::size_t backend_failures,
                              const std::vector<CostEntry>& cost_ledger,
                              std::size_t window_len,
                              const std::optional<PrivacyParams>& privacy = std::nullopt);

// Markdown comparison table, one row per report: sanitization quality,
// communication cost, response time.
std::string render_comparison_markdown(const std::vector<MetricsReport>& reports);

}  // namespace pg
