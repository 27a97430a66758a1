#include "poisonguard/pipeline.hpp"

#include <atomic>
#include <map>
#include <mutex>
#include <thread>

#include "poisonguard/errors.hpp"
#include "poisonguard/text.hpp"

namespace pg {

std::string to_string(EvalMode m) {
  return m == EvalMode::PoisonedOnly ? "poisoned_only" : "mixed";
}

EvalMode eval_mode_from_string(const std::string& s) {
  std::string n = text::lower(text::trim(s));
  if (n == "poisoned_only" || n == "poisonedonly") return EvalMode::PoisonedOnly;
  if (n == "mixed") return EvalMode::Mixed;
  throw ConfigError("unknown evaluation mode: " + s);
}

std::string to_string(Provenance p) {
  switch (p) {
    case Provenance::KeptOriginal: return "kept_original";
    case Provenance::Sanitized: return "sanitized";
    case Provenance::LeftPoisoned: return "left_poisoned";
  }
  return "kept_original";
}

io::ordered_json SanitizedEntry::to_json() const {
  io::ordered_json j;
  j["window_id"] = window_id;
  j["final_label"] = final_label;
  j["provenance"] = to_string(provenance);
  if (provenance == Provenance::Sanitized) {
    j["from"] = from_label;
    j["to"] = to_label;
  }
  return j;
}

io::ordered_json LedgerEntry::to_json() const {
  io::ordered_json j;
  j["window_id"] = window_id;
  j["truth"] = truth_poisoned ? "poisoned" : "clean";
  j["true_label"] = true_label;
  j["reported"] = reported_label;
  if (backend_failure) {
    j["backend_failure"] = failure_reason;
    return j;
  }
  j["detection"] = to_string(detection);
  io::ordered_json sug;
  switch (suggestion.kind) {
    case Suggestion::Kind::None: sug = nullptr; break;
    case Suggestion::Kind::Single: sug = suggestion.labels.front(); break;
    case Suggestion::Kind::Ambiguous: sug = suggestion.labels; break;
  }
  j["suggestion"] = std::move(sug);
  j["outcome"] = to_string(outcome);
  return j;
}

ConfusionCounts counts_from_ledger(const std::vector<LedgerEntry>& ledger) {
  ConfusionCounts c;
  for (const auto& e : ledger) {
    if (e.backend_failure) continue;
    switch (e.outcome) {
      case Outcome::CorrectSanitize:
      case Outcome::WrongSanitize:
      case Outcome::AmbiguousSanitize: c.tp++; break;
      case Outcome::MissedDetection: c.fn++; break;
      case Outcome::FalseAlarmPreserved:
      case Outcome::FalseAlarmAltered: c.fp++; break;
      case Outcome::TrueNegative:
      case Outcome::Unparseable: c.tn++; break;
    }
  }
  return c;
}

SanitizationCounts sanitization_from_ledger(const std::vector<LedgerEntry>& ledger) {
  SanitizationCounts s;
  for (const auto& e : ledger) {
    if (e.backend_failure) continue;
    if (e.outcome == Outcome::CorrectSanitize) s.cs_tp++;
    if (e.outcome == Outcome::FalseAlarmPreserved) s.cs_fp++;
  }
  return s;
}

std::vector<CostEntry> cost_entries_from_exchanges(const std::vector<LlmExchange>& exchanges) {
  std::vector<CostEntry> entries;
  entries.reserve(exchanges.size());
  for (const auto& e : exchanges)
    entries.push_back({e.prompt_chars, e.response_chars, e.latency_seconds});
  return entries;
}

std::size_t RunResult::remaining_poisoned_from_provenance(
    const std::vector<PoisonRecord>& records) const {
  std::map<std::string, const PoisonRecord*> by_id;
  for (const auto& r : records) by_id[r.window_id] = &r;
  std::size_t remaining = 0;
  for (const auto& e : sanitized) {
    auto it = by_id.find(e.window_id);
    if (e.provenance == Provenance::LeftPoisoned) {
      ++remaining;
    } else if (e.provenance == Provenance::Sanitized) {
      // A rewrite only cures the window when it lands on the true label; a
      // rewrite of a clean window poisons it.
      const std::string& truth = it != by_id.end() ? it->second->true_label : e.from_label;
      if (e.to_label != truth) ++remaining;
    }
  }
  return remaining;
}

namespace {

struct WindowSlot {
  LedgerEntry ledger;
  std::optional<SanitizedEntry> sanitized;
  std::optional<LlmExchange> exchange;
};

void process_window(const RunConfig& config, const LabeledWindow& window,
                    const std::optional<PoisonRecord>& truth, const ExamplePool& pool,
                    Backend& backend, ExchangeCache* cache, WindowSlot& slot) {
  const std::string& reported = window.label;
  LedgerEntry& entry = slot.ledger;
  entry.window_id = window.window_id;
  entry.truth_poisoned = truth.has_value();
  entry.true_label = truth ? truth->true_label : reported;
  entry.reported_label = reported;

  PromptInstance prompt = build_prompt(config.prompt_template, config.shot, pool, window,
                                       reported, config.schema, config.precision);

  LlmExchange exchange;
  try {
    std::string cache_key = ExchangeCache::key(backend.id(), prompt.text);
    if (cache) {
      if (auto hit = cache->lookup(cache_key)) {
        // Replay the original exchange (its cost and latency stand) under the
        // current window id.
        exchange = *hit;
        exchange.window_id = window.window_id;
      } else {
        exchange = submit(backend, prompt, config.backend.retry, &window, cache);
      }
    } else {
      exchange = submit(backend, prompt, config.backend.retry, &window, nullptr);
    }
  } catch (const std::exception& e) {
    entry.backend_failure = true;
    entry.failure_reason = e.what();
    return;
  }
  slot.exchange = exchange;

  Verdict verdict = parse_response(exchange.response_text, config.schema.label_set);
  entry.detection = verdict.detection;
  entry.suggestion = verdict.suggestion;
  entry.outcome = classify(verdict, truth, reported);

  SanitizedEntry out;
  out.window_id = window.window_id;
  bool rewrite = verdict.detection == Detection::Poisoned &&
                 verdict.suggestion.single_applicable() &&
                 verdict.suggestion.labels.front() != reported;
  if (rewrite) {
    out.final_label = verdict.suggestion.labels.front();
    out.provenance = Provenance::Sanitized;
    out.from_label = reported;
    out.to_label = out.final_label;
  } else {
    out.final_label = reported;
    out.provenance = truth ? Provenance::LeftPoisoned : Provenance::KeptOriginal;
  }
  slot.sanitized = std::move(out);
}

}  // namespace

RunResult run(const RunConfig& config, const std::vector<LabeledWindow>& windows,
              const std::vector<PoisonRecord>& records, const ExamplePool& pool,
              Backend& backend, ExchangeCache* cache) {
  config.schema.validate();
  config.prompt_template.validate();

  std::map<std::string, const PoisonRecord*> truth_by_id;
  for (const auto& r : records) truth_by_id[r.window_id] = &r;

  if (config.eval_mode == EvalMode::PoisonedOnly) {
    for (const auto& w : windows) {
      if (!truth_by_id.count(w.window_id))
        throw DataError("poisoned-only evaluation, but window " + w.window_id +
                        " has no poison record");
    }
  }

  std::vector<WindowSlot> slots(windows.size());
  auto work = [&](std::size_t i) {
    std::optional<PoisonRecord> truth;
    auto it = truth_by_id.find(windows[i].window_id);
    if (it != truth_by_id.end()) truth = *it->second;
    process_window(config, windows[i], truth, pool, backend, cache, slots[i]);
  };

  const int cap = config.backend.max_concurrency;
  if (cap <= 1 || windows.size() <= 1) {
    for (std::size_t i = 0; i < windows.size(); ++i) work(i);
  } else {
    std::atomic<std::size_t> next{0};
    // Non-backend exceptions (precondition violations while building prompts)
    // must cross the thread boundary instead of killing the process.
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> workers;
    int n_threads = std::min<std::size_t>(static_cast<std::size_t>(cap), windows.size());
    workers.reserve(static_cast<std::size_t>(n_threads));
    for (int t = 0; t < n_threads; ++t) {
      workers.emplace_back([&] {
        while (true) {
          std::size_t i = next.fetch_add(1);
          if (i >= slots.size()) return;
          try {
            work(i);
          } catch (...) {
            std::lock_guard<std::mutex> lock(error_mutex);
            if (!first_error) first_error = std::current_exception();
            next.store(slots.size());  // drain remaining work
            return;
          }
        }
      });
    }
    for (auto& w : workers) w.join();
    if (first_error) std::rethrow_exception(first_error);
  }

  // Results assemble in window order regardless of completion order.
  RunResult result;
  result.ledger.reserve(slots.size());
  for (auto& slot : slots) {
    result.ledger.push_back(std::move(slot.ledger));
    const LedgerEntry& entry = result.ledger.back();
    if (entry.backend_failure) {
      result.backend_failures++;
      continue;
    }
    result.sanitized.push_back(std::move(*slot.sanitized));
    result.exchanges.push_back(std::move(*slot.exchange));
    // Independent tally straight from the detection flag and ground truth.
    bool flagged = entry.detection == Detection::Poisoned;
    if (entry.truth_poisoned) {
      flagged ? result.pipeline_counts.tp++ : result.pipeline_counts.fn++;
    } else {
      flagged ? result.pipeline_counts.fp++ : result.pipeline_counts.tn++;
    }
  }
  return result;
}

void write_sanitized_jsonl(const std::string& path,
                           const std::vector<SanitizedEntry>& entries) {
  std::vector<io::ordered_json> rows;
  rows.reserve(entries.size());
  for (const auto& e : entries) rows.push_back(e.to_json());
  io::write_jsonl(path, rows);
}

void write_ledger_jsonl(const std::string& path, const std::vector<LedgerEntry>& entries) {
  std::vector<io::ordered_json> rows;
  rows.reserve(entries.size());
  for (const auto& e : entries) rows.push_back(e.to_json());
  io::write_jsonl(path, rows);
}

std::vector<LedgerEntry> read_ledger_jsonl(const std::string& path) {
  std::vector<LedgerEntry> entries;
  for (const auto& j : io::read_jsonl(path)) {
    LedgerEntry e;
    e.window_id = j.at("window_id").get<std::string>();
    e.truth_poisoned = j.at("truth").get<std::string>() == "poisoned";
    e.true_label = j.at("true_label").get<std::string>();
    e.reported_label = j.at("reported").get<std::string>();
    if (j.contains("backend_failure")) {
      e.backend_failure = true;
      e.failure_reason = j["backend_failure"].get<std::string>();
    } else {
      std::string d = j.at("detection").get<std::string>();
      e.detection = d == "poisoned" ? Detection::Poisoned
                    : d == "not_poisoned" ? Detection::NotPoisoned
                                          : Detection::Unparseable;
      const auto& sug = j.at("suggestion");
      if (sug.is_null()) {
        e.suggestion = Suggestion::none();
      } else if (sug.is_string()) {
        e.suggestion = Suggestion::single(sug.get<std::string>());
      } else {
        e.suggestion = Suggestion::ambiguous(sug.get<std::vector<std::string>>());
      }
      e.outcome = outcome_from_string(j.at("outcome").get<std::string>());
    }
    entries.push_back(std::move(e));
  }
  return entries;
}

void write_exchanges_jsonl(const std::string& path,
                           const std::vector<LlmExchange>& exchanges) {
  std::vector<io::ordered_json> rows;
  rows.reserve(exchanges.size());
  for (const auto& e : exchanges) rows.push_back(e.to_json());
  io::write_jsonl(path, rows);
}

std::vector<LlmExchange> read_exchanges_jsonl(const std::string& path) {
  std::vector<LlmExchange> exchanges;
  for (const auto& j : io::read_jsonl(path)) exchanges.push_back(LlmExchange::from_json(j));
  return exchanges;
}

}  // namespace pg
