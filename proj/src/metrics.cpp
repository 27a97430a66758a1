#include "poisonguard/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "poisonguard/errors.hpp"

namespace pg {

double detection_accuracy(const ConfusionCounts& c) {
  const std::size_t denom = c.scored();
  if (denom == 0) throw EmptyRun();
  return static_cast<double>(c.tp + c.tn) / static_cast<double>(denom);
}

std::optional<double> sq_tp(const ConfusionCounts& c, const SanitizationCounts& s) {
  if (c.tp == 0) return std::nullopt;
  return static_cast<double>(s.cs_tp) / static_cast<double>(c.tp);
}

std::optional<double> sq_fp(const ConfusionCounts& c, const SanitizationCounts& s) {
  if (c.fp == 0) return std::nullopt;
  return static_cast<double>(s.cs_fp) / static_cast<double>(c.fp);
}

std::optional<double> sq_overall(const ConfusionCounts& c, const SanitizationCounts& s) {
  if (c.tp + c.fp == 0) return std::nullopt;
  return static_cast<double>(s.cs_tp + s.cs_fp) / static_cast<double>(c.tp + c.fp);
}

std::size_t remaining_poisoned(const ConfusionCounts& c, const SanitizationCounts& s) {
  if (s.cs_tp > c.tp || s.cs_fp > c.fp)
    throw InconsistentLedger("sanitization counts exceed their detection denominators");
  return c.fn + (c.tp - s.cs_tp) + (c.fp - s.cs_fp);
}

std::optional<RemainProbability> prob_remains_poisoned(const ConfusionCounts& c,
                                                       const SanitizationCounts& s) {
  const std::size_t poisoned = c.fn + c.tp;
  if (poisoned == 0) return std::nullopt;
  RemainProbability r;
  r.as_printed = static_cast<double>(remaining_poisoned(c, s)) / static_cast<double>(poisoned);
  r.truth_restricted =
      static_cast<double>(c.fn + (c.tp - s.cs_tp)) / static_cast<double>(poisoned);
  return r;
}

CommCost comm_cost(const std::vector<CostEntry>& ledger, std::size_t window_len) {
  CommCost cost;
  cost.window_len = window_len;
  cost.exchanges = ledger.size();
  for (const auto& e : ledger) {
    cost.total_prompt_chars += e.prompt_chars;
    cost.total_response_chars += e.response_chars;
  }
  cost.total_chars = cost.total_prompt_chars + cost.total_response_chars;
  cost.total_samples = cost.exchanges * window_len;
  return cost;
}

std::optional<LatencyStats> latency_stats(const std::vector<CostEntry>& ledger) {
  if (ledger.empty()) return std::nullopt;
  std::vector<double> t;
  t.reserve(ledger.size());
  for (const auto& e : ledger) t.push_back(e.latency_seconds);
  std::sort(t.begin(), t.end());
  LatencyStats s;
  for (double v : t) s.total += v;
  s.mean = s.total / static_cast<double>(t.size());
  s.max = t.back();
  const std::size_t n = t.size();
  s.median = n % 2 == 1 ? t[n / 2] : (t[n / 2 - 1] + t[n / 2]) / 2.0;
  return s;
}

double privacy_leak(const PrivacyParams& params) {
  if (params.p < 0.0 || params.p > 1.0)
    throw ConfigError("interception probability must be in [0, 1]");
  if (params.m == 0) return 0.0;
  return 1.0 - std::pow(1.0 - params.p, static_cast<double>(params.m));
}

namespace {

io::ordered_json opt_json(const std::optional<double>& v) {
  if (v) return *v;
  return nullptr;
}

}  // namespace

io::ordered_json MetricsReport::to_json() const {
  io::ordered_json j;
  j["run_id"] = run_id;
  j["backend"] = backend;
  j["dataset"] = dataset;
  j["shot_mode"] = shot_mode;
  j["counts"] = {{"tp", counts.tp}, {"tn", counts.tn}, {"fp", counts.fp},
                 {"fn", counts.fn}, {"cs_tp", sanitization.cs_tp},
                 {"cs_fp", sanitization.cs_fp}, {"backend_failures", backend_failures}};
  j["detection_accuracy"] = accuracy;
  j["sq_tp"] = opt_json(sq_tp_value);
  j["sq_fp"] = opt_json(sq_fp_value);
  j["sq_overall"] = opt_json(sq_overall_value);
  j["remaining_poisoned"] = remaining;
  if (remain_probability) {
    j["p_remains_poisoned"] = {{"as_printed", remain_probability->as_printed},
                               {"truth_restricted", remain_probability->truth_restricted}};
  } else {
    j["p_remains_poisoned"] = nullptr;
  }
  j["comm"] = {{"total_prompt_chars", comm.total_prompt_chars},
               {"total_response_chars", comm.total_response_chars},
               {"total_chars", comm.total_chars},
               {"exchanges", comm.exchanges},
               {"window_len", comm.window_len},
               {"total_samples", comm.total_samples}};
  if (latency) {
    j["latency"] = {{"mean", latency->mean},
                    {"median", latency->median},
                    {"max", latency->max},
                    {"total", latency->total}};
  } else {
    j["latency"] = nullptr;
  }
  if (privacy) {
    j["privacy"] = {{"p", privacy->p}, {"m", privacy->m}, {"p_leak", *privacy_leak_value}};
  } else {
    j["privacy"] = nullptr;
  }
  return j;
}

MetricsReport MetricsReport::from_json(const io::ordered_json& j) {
  MetricsReport r;
  r.run_id = j.at("run_id").get<std::string>();
  r.backend = j.at("backend").get<std::string>();
  r.dataset = j.at("dataset").get<std::string>();
  r.shot_mode = j.at("shot_mode").get<std::string>();
  const auto& c = j.at("counts");
  r.counts = {c.at("tp").get<std::size_t>(), c.at("tn").get<std::size_t>(),
              c.at("fp").get<std::size_t>(), c.at("fn").get<std::size_t>()};
  r.sanitization = {c.at("cs_tp").get<std::size_t>(), c.at("cs_fp").get<std::size_t>()};
  r.backend_failures = c.at("backend_failures").get<std::size_t>();
  r.accuracy = j.at("detection_accuracy").get<double>();
  auto opt = [&](const char* key) -> std::optional<double> {
    if (j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<double>();
  };
  r.sq_tp_value = opt("sq_tp");
  r.sq_fp_value = opt("sq_fp");
  r.sq_overall_value = opt("sq_overall");
  r.remaining = j.at("remaining_poisoned").get<std::size_t>();
  if (!j.at("p_remains_poisoned").is_null()) {
    RemainProbability p;
    p.as_printed = j["p_remains_poisoned"].at("as_printed").get<double>();
    p.truth_restricted = j["p_remains_poisoned"].at("truth_restricted").get<double>();
    r.remain_probability = p;
  }
  const auto& comm = j.at("comm");
  r.comm.total_prompt_chars = comm.at("total_prompt_chars").get<std::size_t>();
  r.comm.total_response_chars = comm.at("total_response_chars").get<std::size_t>();
  r.comm.total_chars = comm.at("total_chars").get<std::size_t>();
  r.comm.exchanges = comm.at("exchanges").get<std::size_t>();
  r.comm.window_len = comm.at("window_len").get<std::size_t>();
  r.comm.total_samples = comm.at("total_samples").get<std::size_t>();
  if (!j.at("latency").is_null()) {
    LatencyStats s;
    s.mean = j["latency"].at("mean").get<double>();
    s.median = j["latency"].at("median").get<double>();
    s.max = j["latency"].at("max").get<double>();
    s.total = j["latency"].at("total").get<double>();
    r.latency = s;
  }
  if (!j.at("privacy").is_null()) {
    PrivacyParams p;
    p.p = j["privacy"].at("p").get<double>();
    p.m = j["privacy"].at("m").get<std::size_t>();
    r.privacy = p;
    r.privacy_leak_value = j["privacy"].at("p_leak").get<double>();
  }
  return r;
}

MetricsReport assemble_report(const std::string& run_id, const std::string& backend,
                              const std::string& dataset, const std::string& shot_mode,
                              const ConfusionCounts& counts, const SanitizationCounts& sanit,
                              std::size_t backend_failures,
                              const std::vector<CostEntry>& cost_ledger,
                              std::size_t window_len,
                              const std::optional<PrivacyParams>& privacy) {
  if (sanit.cs_tp > counts.tp || sanit.cs_fp > counts.fp)
    throw InconsistentLedger("sanitization counts exceed detection counts");
  MetricsReport r;
  r.run_id = run_id;
  r.backend = backend;
  r.dataset = dataset;
  r.shot_mode = shot_mode;
  r.counts = counts;
  r.sanitization = sanit;
  r.backend_failures = backend_failures;
  r.accuracy = detection_accuracy(counts);
  r.sq_tp_value = sq_tp(counts, sanit);
  r.sq_fp_value = sq_fp(counts, sanit);
  r.sq_overall_value = sq_overall(counts, sanit);
  r.remaining = remaining_poisoned(counts, sanit);
  r.remain_probability = prob_remains_poisoned(counts, sanit);
  r.comm = comm_cost(cost_ledger, window_len);
  r.latency = latency_stats(cost_ledger);
  if (privacy) {
    PrivacyParams p = *privacy;
    p.m = cost_ledger.size();
    r.privacy = p;
    r.privacy_leak_value = privacy_leak(p);
  }
  return r;
}

namespace {

std::string fmt2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string fmt_opt(const std::optional<double>& v) {
  return v ? fmt2(*v) : std::string("-");
}

}  // namespace

std::string render_comparison_markdown(const std::vector<MetricsReport>& reports) {
  // Same shape as the published method-comparison table: sanitization
  // quality, then communication cost (response characters), then response
  // time in seconds.
  std::string out;
  out += "| Model | Dataset | Acc. | Sanit.Q. | Comm. Cost (chars) | Resp. Time (s) |\n";
  out += "|---|---|---|---|---|---|\n";
  for (const auto& r : reports) {
    out += "| " + r.backend + "-" + r.shot_mode;
    out += " | " + r.dataset;
    out += " | " + fmt2(r.accuracy);
    out += " | " + fmt_opt(r.sq_tp_value);
    out += " | " + std::to_string(r.comm.total_response_chars);
    out += " | " + fmt2(r.latency ? r.latency->total : 0.0);
    out += " |\n";
  }
  return out;
}

}  // namespace pg
