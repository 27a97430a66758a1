// Command-line front end: synth -> ingest -> poison -> run -> report, plus
// knn-fit / knn-eval for the traditional baseline and the oracle backend.
// Artifacts are JSONL hand-offs so the expensive step (remote model calls)
// can be cached and re-scored without re-querying.

#include <ctime>
#include <iostream>
#include <map>
#include <optional>

#include <CLI11.hpp>

#include "poisonguard/attack.hpp"
#include "poisonguard/baseline.hpp"
#include "poisonguard/dataset.hpp"
#include "poisonguard/errors.hpp"
#include "poisonguard/llm.hpp"
#include "poisonguard/metrics.hpp"
#include "poisonguard/pipeline.hpp"
#include "poisonguard/prompt.hpp"
#include "poisonguard/synth.hpp"
#include "poisonguard/text.hpp"

namespace {

using pg::io::ordered_json;

struct CommonOpts {
  std::string config_file;
  ordered_json config = ordered_json::object();

  void load() {
    if (!config_file.empty()) {
      config = ordered_json::parse(pg::io::read_file(config_file));
      if (!config.is_object()) throw pg::ConfigError("config file must hold a JSON object");
    }
  }

  // Config entry fills in any option the command line left untouched.
  template <typename T>
  void fall_back(const CLI::App* cmd, const std::string& flag, const std::string& key,
                 T& value) const {
    const CLI::Option* opt = cmd->get_option_no_throw(flag);
    if (opt && opt->count() == 0 && config.contains(key)) value = config[key].get<T>();
  }
};

pg::DatasetSchema resolve_schema(const std::string& dataset, const std::string& schema_file) {
  if (!schema_file.empty()) return pg::DatasetSchema::from_json_file(schema_file);
  if (dataset.empty()) throw pg::ConfigError("specify --dataset or --schema-file");
  if (pg::DatasetSchema::is_builtin(dataset)) return pg::DatasetSchema::builtin(dataset);
  throw pg::ConfigError("not a built-in dataset (use --schema-file): " + dataset);
}

std::string iso_timestamp() {
  std::time_t now = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  return buf;
}

int cmd_synth(const std::string& dataset, const std::string& schema_file, std::size_t per_class,
              std::uint64_t seed, double noise, const std::string& out) {
  pg::DatasetSchema schema = resolve_schema(dataset, schema_file);
  pg::SynthOptions options;
  options.samples_per_class = per_class;
  options.seed = seed;
  options.noise_scale = noise;
  pg::io::atomic_write(out, pg::synth_csv(schema, options));
  std::cout << "wrote " << per_class * schema.label_set.size() << " rows ("
            << schema.label_set.size() << " activities) to " << out << "\n";
  return 0;
}

int cmd_ingest(const pg::DatasetSchema& schema, const std::string& input, int window_len,
               pg::WindowPolicy policy, int pool_per_class, std::uint64_t seed,
               const std::string& out, const std::string& pool_out) {
  std::vector<pg::LabeledRow> rows = pg::load_dataset(input, schema);
  pg::SegmentStats stats;
  std::vector<pg::LabeledWindow> windows = pg::segment(rows, schema, window_len, policy, &stats);

  pg::ExamplePool pool;
  if (pool_per_class > 0) {
    auto [p, remaining] = pg::build_example_pool(windows, pool_per_class, seed, &schema.label_set);
    pool = std::move(p);
    windows = std::move(remaining);
    if (pool_out.empty()) throw pg::ConfigError("--pool-per-class needs --pool-out");
    std::vector<pg::LabeledWindow> pool_windows;
    for (const auto& [_, v] : pool.by_activity)
      pool_windows.insert(pool_windows.end(), v.begin(), v.end());
    pg::write_windows_jsonl(pool_out, pool_windows);
  }

  pg::write_windows_jsonl(out, windows);

  std::map<std::string, std::size_t> per_class;
  for (const auto& w : windows) per_class[w.label]++;
  std::cout << "samples: " << stats.input_samples << ", windows: " << windows.size()
            << ", discarded samples: " << stats.discarded_samples << "\n";
  for (const auto& [label, count] : per_class)
    std::cout << "  " << label << ": " << count << "\n";
  if (windows.empty())
    std::cerr << "warning: input produced no windows (short file or mixed labels?)\n";
  if (pool_per_class > 0)
    std::cout << "example pool: " << pool.total() << " windows (" << pool_per_class
              << " per class) -> " << pool_out << "\n";
  return 0;
}

int cmd_poison(const pg::DatasetSchema& schema, const std::string& windows_file,
               pg::AttackStrategy strategy, double rate, std::uint64_t seed,
               const std::string& similarity_file, const std::string& out_windows,
               const std::string& out_records) {
  std::vector<pg::LabeledWindow> windows = pg::read_windows_jsonl(windows_file);

  pg::AttackSpec spec;
  spec.strategy = strategy;
  spec.rate = rate;
  spec.seed = seed;
  if (strategy == pg::AttackStrategy::Targeted) {
    spec.similarity = similarity_file.empty()
                          ? pg::SimilarityMap::builtin(schema.name)
                          : pg::SimilarityMap::from_json_file(similarity_file);
  }

  auto [poisoned, records] = pg::poison(windows, spec, schema);
  pg::write_windows_jsonl(out_windows, poisoned);
  pg::write_records_jsonl(out_records, records);
  std::cout << "poisoned " << records.size() << " of " << windows.size() << " windows ("
            << pg::to_string(strategy) << ", rate " << rate << ", seed " << seed << ")\n";
  return 0;
}

struct RunPaths {
  std::filesystem::path dir;
  std::filesystem::path manifest, sanitized, ledger, exchanges, report_json, report_md;
};

RunPaths run_paths(const std::string& outdir, const std::string& run_id) {
  RunPaths p;
  p.dir = std::filesystem::path(outdir) / run_id;
  p.manifest = p.dir / "manifest.json";
  p.sanitized = p.dir / "sanitized.jsonl";
  p.ledger = p.dir / "ledger.jsonl";
  p.exchanges = p.dir / "exchanges.jsonl";
  p.report_json = p.dir / "report.json";
  p.report_md = p.dir / "report.md";
  return p;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

void write_per_window_csv(const std::filesystem::path& path,
                          const pg::RunResult& result) {
  std::map<std::string, const pg::LlmExchange*> by_id;
  for (const auto& e : result.exchanges) by_id[e.window_id] = &e;
  std::string csv =
      "window_id,truth,true_label,reported,detection,suggestion,outcome,"
      "prompt_chars,response_chars,latency_seconds\n";
  for (const auto& e : result.ledger) {
    csv += csv_escape(e.window_id);
    csv += e.truth_poisoned ? ",poisoned," : ",clean,";
    csv += csv_escape(e.true_label) + "," + csv_escape(e.reported_label) + ",";
    if (e.backend_failure) {
      csv += "backend_failure,,,,,\n";
      continue;
    }
    csv += pg::to_string(e.detection) + ",";
    csv += csv_escape(pg::text::join(e.suggestion.labels, "/")) + ",";
    csv += pg::to_string(e.outcome) + ",";
    auto it = by_id.find(e.window_id);
    if (it != by_id.end()) {
      csv += std::to_string(it->second->prompt_chars) + "," +
             std::to_string(it->second->response_chars) + "," +
             pg::text::format_significant(it->second->latency_seconds, 6);
    } else {
      csv += ",,";
    }
    csv += "\n";
  }
  pg::io::atomic_write(path, csv);
}

int cmd_run(const pg::DatasetSchema& schema, const std::string& windows_file,
            const std::string& records_file, const std::string& pool_file,
            const pg::ShotSpec& shot, pg::BackendDescriptor backend, pg::EvalMode eval_mode,
            std::uint64_t seed, int precision, const std::string& template_file,
            const std::string& outdir, std::string run_id, const std::string& cache_file,
            std::optional<double> privacy_p, bool csv) {
  std::vector<pg::LabeledWindow> windows = pg::read_windows_jsonl(windows_file);
  std::vector<pg::PoisonRecord> records =
      records_file.empty() ? std::vector<pg::PoisonRecord>{}
                           : pg::read_records_jsonl(records_file);

  pg::ExamplePool pool;
  pool.per_class = 0;
  if (!pool_file.empty()) {
    std::vector<pg::LabeledWindow> pool_windows = pg::read_windows_jsonl(pool_file);
    int per_class = 0;
    for (const auto& w : pool_windows) pool.by_activity[w.label].push_back(w);
    for (const auto& [_, v] : pool.by_activity)
      per_class = std::max<int>(per_class, static_cast<int>(v.size()));
    pool.per_class = per_class;
  }

  pg::RunConfig config;
  config.schema = schema;
  config.shot = shot;
  config.backend = backend;
  config.eval_mode = eval_mode;
  config.seed = seed;
  config.precision = precision;
  config.prompt_template = template_file.empty()
                               ? pg::PromptTemplate::default_for(schema, shot.mode)
                               : pg::PromptTemplate::load(template_file);
  if (run_id.empty())
    run_id = "run-" + pg::to_string(backend.kind) + "-" + shot.name() + "-s" +
             std::to_string(seed);
  config.run_id = run_id;

  RunPaths paths = run_paths(outdir, run_id);

  // Reproducibility fingerprint over everything that shapes the outputs.
  ordered_json manifest;
  manifest["run_id"] = run_id;
  manifest["dataset"] = schema.to_json();
  manifest["shot_mode"] = shot.name();
  manifest["shots_per_class"] = shot.shots_per_class();
  manifest["backend"] = {{"kind", pg::to_string(backend.kind)},
                         {"id", backend.id()},
                         {"max_concurrency", backend.max_concurrency}};
  // The backend's behavior is part of the run's identity.
  if (backend.kind == pg::BackendKind::MockScripted)
    manifest["backend"]["script_fingerprint"] = pg::io::file_fingerprint(backend.script_path);
  if (backend.kind == pg::BackendKind::OracleKnn)
    manifest["backend"]["model_fingerprint"] =
        pg::io::file_fingerprint(backend.oracle_model_path);
  manifest["eval_mode"] = pg::to_string(eval_mode);
  manifest["seed"] = seed;
  manifest["precision"] = precision;
  manifest["inputs"] = {{"windows", windows_file},
                        {"windows_fingerprint", pg::io::file_fingerprint(windows_file)},
                        {"records", records_file},
                        {"records_fingerprint",
                         records_file.empty() ? "" : pg::io::file_fingerprint(records_file)},
                        {"pool", pool_file},
                        {"pool_fingerprint",
                         pool_file.empty() ? "" : pg::io::file_fingerprint(pool_file)}};
  manifest["template_fingerprint"] =
      pg::io::content_fingerprint(config.prompt_template.skeleton);
  std::string config_fingerprint = pg::io::content_fingerprint(manifest.dump());
  manifest["config_fingerprint"] = config_fingerprint;
  manifest["created"] = iso_timestamp();

  if (std::filesystem::exists(paths.manifest)) {
    ordered_json previous = ordered_json::parse(pg::io::read_file(paths.manifest));
    if (previous.value("config_fingerprint", "") != config_fingerprint)
      throw pg::ConfigError("run directory " + paths.dir.string() +
                            " holds a different run (manifest fingerprint mismatch); "
                            "pick a new --run-id or delete it first");
  }

  std::unique_ptr<pg::Backend> be = pg::make_backend(backend);
  std::unique_ptr<pg::ExchangeCache> cache;
  if (!cache_file.empty()) cache = std::make_unique<pg::ExchangeCache>(cache_file);

  pg::RunResult result = pg::run(config, windows, records, pool, *be, cache.get());

  std::size_t window_len = windows.empty() ? static_cast<std::size_t>(schema.default_window)
                                           : windows.front().samples.size();
  std::optional<pg::PrivacyParams> privacy;
  if (privacy_p) privacy = pg::PrivacyParams{*privacy_p, 0};
  pg::MetricsReport report = pg::assemble_report(
      run_id, pg::to_string(backend.kind), schema.name, shot.name(),
      result.counts_from_outcomes(), result.sanitization_counts(), result.backend_failures,
      result.cost_entries(), window_len, privacy);

  std::filesystem::create_directories(paths.dir);
  pg::io::atomic_write(paths.manifest, manifest.dump(2) + "\n");
  pg::write_sanitized_jsonl(paths.sanitized.string(), result.sanitized);
  pg::write_ledger_jsonl(paths.ledger.string(), result.ledger);
  pg::write_exchanges_jsonl(paths.exchanges.string(), result.exchanges);
  pg::io::atomic_write(paths.report_json, report.to_json().dump(2) + "\n");
  pg::io::atomic_write(paths.report_md, pg::render_comparison_markdown({report}));
  if (csv) write_per_window_csv(paths.dir / "per_window.csv", result);

  std::cout << "run " << run_id << ": " << result.ledger.size() << " windows, "
            << result.backend_failures << " backend failures\n";
  std::cout << "  accuracy " << report.accuracy;
  if (report.sq_tp_value) std::cout << ", SQ_TP " << *report.sq_tp_value;
  std::cout << ", remaining poisoned " << report.remaining << "\n";
  std::cout << "  artifacts in " << paths.dir.string() << "\n";
  return 0;
}

int cmd_templates(const std::string& outdir) {
  std::filesystem::create_directories(outdir);
  int written = 0;
  for (const char* dataset : {"MotionSense", "HHAR", "WISDM"}) {
    pg::DatasetSchema schema = pg::DatasetSchema::builtin(dataset);
    for (pg::ShotMode mode : {pg::ShotMode::Zero, pg::ShotMode::One, pg::ShotMode::Few}) {
      pg::ShotSpec spec{mode, 3};
      pg::PromptTemplate tpl = pg::PromptTemplate::default_for(schema, mode);
      std::string name = pg::text::lower(schema.name) + "_" + spec.name() + ".txt";
      tpl.save((std::filesystem::path(outdir) / name).string());
      ++written;
    }
  }
  std::cout << "wrote " << written << " template files to " << outdir << "\n";
  return 0;
}

// A run directory is re-scored from its raw ledger and exchange logs, not
// from the stored report.json, so stale or hand-edited summaries cannot leak
// into a comparison. A plain file argument is taken as a report JSON.
pg::MetricsReport rescore_run_dir(const std::filesystem::path& dir) {
  ordered_json manifest = ordered_json::parse(pg::io::read_file(dir / "manifest.json"));
  std::vector<pg::LedgerEntry> ledger = pg::read_ledger_jsonl((dir / "ledger.jsonl").string());
  std::vector<pg::LlmExchange> exchanges =
      pg::read_exchanges_jsonl((dir / "exchanges.jsonl").string());
  std::size_t failures = 0;
  for (const auto& e : ledger)
    if (e.backend_failure) ++failures;
  std::size_t window_len = manifest.at("dataset").at("default_window").get<std::size_t>();
  return pg::assemble_report(
      manifest.at("run_id").get<std::string>(),
      manifest.at("backend").at("kind").get<std::string>(),
      manifest.at("dataset").at("name").get<std::string>(),
      manifest.at("shot_mode").get<std::string>(), pg::counts_from_ledger(ledger),
      pg::sanitization_from_ledger(ledger), failures,
      pg::cost_entries_from_exchanges(exchanges), window_len);
}

int cmd_report(const std::vector<std::string>& runs, const std::string& out_md,
               const std::string& out_json) {
  if (runs.empty()) throw pg::ConfigError("report needs at least one --run");
  std::vector<pg::MetricsReport> reports;
  for (const auto& r : runs) {
    std::filesystem::path p(r);
    if (std::filesystem::is_directory(p)) {
      reports.push_back(rescore_run_dir(p));
    } else {
      reports.push_back(
          pg::MetricsReport::from_json(ordered_json::parse(pg::io::read_file(p))));
    }
  }
  std::string md = pg::render_comparison_markdown(reports);
  ordered_json all = ordered_json::array();
  for (const auto& r : reports) all.push_back(r.to_json());
  if (!out_md.empty()) pg::io::atomic_write(out_md, md);
  if (!out_json.empty()) pg::io::atomic_write(out_json, all.dump(2) + "\n");
  std::cout << md;
  return 0;
}

int cmd_knn_fit(const std::string& windows_file, std::uint64_t seed, int folds,
                bool standardize, const std::string& out) {
  std::vector<pg::LabeledWindow> windows = pg::read_windows_jsonl(windows_file);
  pg::KnnFitOptions options = pg::KnnFitOptions::defaults(seed);
  options.folds = folds;
  options.standardize = standardize;
  pg::KnnFitReport fit;
  pg::KnnModel model = pg::knn_fit_windows(windows, options, &fit);
  model.save(out);
  std::cout << "trained on " << fit.train_size << " samples, chose k=" << fit.chosen_k
            << " (" << fit.fit_seconds << " s) -> " << out << "\n";
  return 0;
}

int cmd_knn_eval(const std::string& model_file, const std::string& windows_file,
                 const std::string& records_file, const std::string& out) {
  pg::KnnModel model = pg::KnnModel::load(model_file);
  std::vector<pg::LabeledWindow> windows = pg::read_windows_jsonl(windows_file);
  std::vector<pg::PoisonRecord> records = pg::read_records_jsonl(records_file);
  pg::BaselineReport report = pg::evaluate_baseline(model, windows, records);
  if (!out.empty()) pg::io::atomic_write(out, report.to_json().dump(2) + "\n");
  std::cout << "windows: " << report.total_windows
            << ", detection accuracy: " << report.detection_accuracy()
            << ", sanitization rate: " << report.sanitization_rate() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Label-poisoning attack simulation and prompt-based sanitization harness"};
  app.require_subcommand(1);

  CommonOpts common;
  app.add_option("--config", common.config_file, "JSON config file (flags override)")
      ->envname("POISONGUARD_CONFIG");

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic surrogate CSV");
  std::string sy_dataset = "MotionSense", sy_schema, sy_out = "synth.csv";
  std::size_t sy_per_class = 2000;
  std::uint64_t sy_seed = 0;
  double sy_noise = 1.0;
  synth->add_option("--dataset", sy_dataset, "Built-in dataset layout");
  synth->add_option("--schema-file", sy_schema, "Custom schema descriptor");
  synth->add_option("--samples-per-class", sy_per_class, "Rows per activity");
  synth->add_option("--seed", sy_seed, "Generator seed")->required();
  synth->add_option("--noise", sy_noise, "Noise scale multiplier");
  synth->add_option("--out", sy_out, "Output CSV path")->required();

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Load a CSV and segment it into windows");
  std::string in_dataset, in_schema, in_input, in_out = "windows.jsonl", in_pool_out;
  int in_window_len = 0, in_pool_per_class = 0;
  std::string in_policy = "same_label_only";
  std::uint64_t in_seed = 0;
  ingest->add_option("--dataset", in_dataset, "Built-in dataset name");
  ingest->add_option("--schema-file", in_schema, "Custom schema descriptor");
  ingest->add_option("--input", in_input, "CSV input")->required();
  ingest->add_option("--window-len", in_window_len, "Window length (schema default if 0)");
  ingest->add_option("--policy", in_policy, "same_label_only | majority_label");
  ingest->add_option("--pool-per-class", in_pool_per_class,
                     "Reserve this many windows per activity for prompting");
  ingest->add_option("--pool-out", in_pool_out, "Where to write the example pool");
  ingest->add_option("--seed", in_seed, "Pool sampling seed");
  ingest->add_option("--out", in_out, "Output windows JSONL");

  // poison
  auto* poison = app.add_subcommand("poison", "Flip labels per an attack spec");
  std::string po_dataset, po_schema, po_windows, po_similarity;
  std::string po_strategy = "targeted";
  double po_rate = 1.0;
  std::uint64_t po_seed = 0;
  std::string po_out_windows = "poisoned.jsonl", po_out_records = "records.jsonl";
  poison->add_option("--dataset", po_dataset, "Built-in dataset name");
  poison->add_option("--schema-file", po_schema, "Custom schema descriptor");
  poison->add_option("--windows", po_windows, "Clean windows JSONL")->required();
  poison->add_option("--strategy", po_strategy, "targeted | random");
  poison->add_option("--rate", po_rate, "Fraction of windows to poison");
  poison->add_option("--seed", po_seed, "Attack seed")->required();
  poison->add_option("--similarity-file", po_similarity,
                     "Similarity map JSON (built-in map if omitted)");
  poison->add_option("--out-windows", po_out_windows, "Poisoned windows JSONL");
  poison->add_option("--out-records", po_out_records, "Poison records JSONL");

  // run
  auto* runc = app.add_subcommand("run", "Detection + sanitization over a window set");
  std::string ru_dataset, ru_schema, ru_windows, ru_records, ru_pool, ru_template, ru_cache;
  std::string ru_shot = "zero";
  int ru_shots = 3, ru_precision = 6, ru_concurrency = 0;
  std::string ru_backend = "mock", ru_script, ru_endpoint, ru_model, ru_credential_env,
              ru_oracle_model;
  std::string ru_eval = "poisoned_only", ru_outdir = "out", ru_run_id;
  std::uint64_t ru_seed = 0;
  double ru_privacy_p = -1.0;
  int ru_max_attempts = 3;
  runc->add_option("--dataset", ru_dataset, "Built-in dataset name");
  runc->add_option("--schema-file", ru_schema, "Custom schema descriptor");
  runc->add_option("--windows", ru_windows, "Windows to evaluate (JSONL)")->required();
  runc->add_option("--records", ru_records, "Poison records JSONL (ground truth)");
  runc->add_option("--pool", ru_pool, "Example pool JSONL for one/few-shot prompts");
  runc->add_option("--shot", ru_shot, "zero | one | few");
  runc->add_option("--shots", ru_shots, "Examples per activity in few mode");
  runc->add_option("--backend", ru_backend, "mock | oracle | remote");
  runc->add_option("--script", ru_script, "Mock script JSON");
  runc->add_option("--endpoint", ru_endpoint, "Remote chat endpoint URL");
  runc->add_option("--model", ru_model, "Remote model name");
  runc->add_option("--credential-env", ru_credential_env,
                   "Env var holding the API key (default POISONGUARD_API_KEY)");
  runc->add_option("--oracle-model", ru_oracle_model, "Trained KNN model file");
  runc->add_option("--max-attempts", ru_max_attempts, "Retry budget per window");
  runc->add_option("--max-concurrency", ru_concurrency, "Concurrent requests (default 1)");
  runc->add_option("--eval-mode", ru_eval, "poisoned_only | mixed");
  runc->add_option("--template", ru_template, "Prompt template file");
  runc->add_option("--precision", ru_precision, "Significant digits for sensor text");
  runc->add_option("--cache", ru_cache, "Exchange cache JSONL");
  runc->add_option("--privacy-p", ru_privacy_p,
                   "Per-interaction interception probability for the leak estimate");
  runc->add_option("--outdir", ru_outdir, "Artifact directory");
  runc->add_option("--run-id", ru_run_id, "Run identifier (derived if omitted)");
  runc->add_option("--seed", ru_seed, "Run seed")->required();
  bool ru_csv = false;
  runc->add_flag("--csv", ru_csv, "Also write per_window.csv into the run directory");

  // templates
  auto* templates = app.add_subcommand("templates", "Write the default prompt templates");
  std::string tp_outdir = "templates";
  templates->add_option("--outdir", tp_outdir, "Directory for the template files");

  // report
  auto* report = app.add_subcommand("report", "Comparison table over finished runs");
  std::vector<std::string> re_runs;
  std::string re_out_md, re_out_json;
  report->add_option("--run", re_runs, "Run directory or report.json (repeatable)")
      ->required();
  report->add_option("--out-md", re_out_md, "Markdown output");
  report->add_option("--out-json", re_out_json, "JSON output");

  // knn-fit
  auto* knn_fit = app.add_subcommand("knn-fit", "Train the KNN baseline on clean windows");
  std::string kf_windows, kf_out = "model.knn";
  std::uint64_t kf_seed = 0;
  int kf_folds = 5;
  bool kf_standardize = false;
  knn_fit->add_option("--windows", kf_windows, "Clean windows JSONL")->required();
  knn_fit->add_option("--seed", kf_seed, "Fold shuffle seed")->required();
  knn_fit->add_option("--folds", kf_folds, "Cross-validation folds");
  knn_fit->add_flag("--standardize", kf_standardize, "Z-score features (fit on train only)");
  knn_fit->add_option("--out", kf_out, "Model output path");

  // knn-eval
  auto* knn_eval = app.add_subcommand("knn-eval", "Score the baseline on poisoned windows");
  std::string ke_model, ke_windows, ke_records, ke_out;
  knn_eval->add_option("--model", ke_model, "Trained model file")->required();
  knn_eval->add_option("--windows", ke_windows, "Poisoned windows JSONL")->required();
  knn_eval->add_option("--records", ke_records, "Poison records JSONL")->required();
  knn_eval->add_option("--out", ke_out, "Report JSON output");

  try {
    app.parse(argc, argv);
    common.load();

    if (synth->parsed()) {
      common.fall_back(synth, "--dataset", "dataset", sy_dataset);
      common.fall_back(synth, "--schema-file", "schema_file", sy_schema);
      return cmd_synth(sy_dataset, sy_schema, sy_per_class, sy_seed, sy_noise, sy_out);
    }

    if (ingest->parsed()) {
      common.fall_back(ingest, "--dataset", "dataset", in_dataset);
      common.fall_back(ingest, "--schema-file", "schema_file", in_schema);
      common.fall_back(ingest, "--window-len", "window_len", in_window_len);
      common.fall_back(ingest, "--policy", "window_policy", in_policy);
      pg::DatasetSchema schema = resolve_schema(in_dataset, in_schema);
      int window_len = in_window_len > 0 ? in_window_len : schema.default_window;
      return cmd_ingest(schema, in_input, window_len,
                        pg::window_policy_from_string(in_policy), in_pool_per_class, in_seed,
                        in_out, in_pool_out);
    }

    if (poison->parsed()) {
      common.fall_back(poison, "--dataset", "dataset", po_dataset);
      common.fall_back(poison, "--schema-file", "schema_file", po_schema);
      common.fall_back(poison, "--strategy", "attack_strategy", po_strategy);
      common.fall_back(poison, "--rate", "attack_rate", po_rate);
      common.fall_back(poison, "--similarity-file", "similarity_file", po_similarity);
      pg::DatasetSchema schema = resolve_schema(po_dataset, po_schema);
      return cmd_poison(schema, po_windows, pg::attack_strategy_from_string(po_strategy),
                        po_rate, po_seed, po_similarity, po_out_windows, po_out_records);
    }

    if (runc->parsed()) {
      common.fall_back(runc, "--dataset", "dataset", ru_dataset);
      common.fall_back(runc, "--schema-file", "schema_file", ru_schema);
      common.fall_back(runc, "--shot", "shot_mode", ru_shot);
      common.fall_back(runc, "--shots", "shots_per_class", ru_shots);
      common.fall_back(runc, "--backend", "backend", ru_backend);
      common.fall_back(runc, "--script", "mock_script", ru_script);
      common.fall_back(runc, "--endpoint", "endpoint", ru_endpoint);
      common.fall_back(runc, "--model", "model", ru_model);
      common.fall_back(runc, "--credential-env", "credential_env", ru_credential_env);
      common.fall_back(runc, "--oracle-model", "oracle_model", ru_oracle_model);
      common.fall_back(runc, "--eval-mode", "eval_mode", ru_eval);
      common.fall_back(runc, "--template", "template_file", ru_template);
      common.fall_back(runc, "--precision", "precision", ru_precision);
      common.fall_back(runc, "--cache", "cache_file", ru_cache);
      common.fall_back(runc, "--outdir", "outdir", ru_outdir);
      common.fall_back(runc, "--max-attempts", "max_attempts", ru_max_attempts);
      common.fall_back(runc, "--max-concurrency", "max_concurrency", ru_concurrency);
      common.fall_back(runc, "--privacy-p", "privacy_p", ru_privacy_p);
      pg::DatasetSchema schema = resolve_schema(ru_dataset, ru_schema);
      pg::BackendDescriptor backend;
      backend.kind = pg::backend_kind_from_string(ru_backend);
      backend.script_path = ru_script;
      backend.endpoint_url = ru_endpoint;
      backend.model = ru_model;
      if (!ru_credential_env.empty()) backend.credential_env = ru_credential_env;
      backend.oracle_model_path = ru_oracle_model;
      backend.retry.max_attempts = ru_max_attempts;
      if (ru_concurrency > 0) backend.max_concurrency = ru_concurrency;
      std::optional<double> privacy_p;
      if (ru_privacy_p >= 0.0) privacy_p = ru_privacy_p;
      return cmd_run(schema, ru_windows, ru_records, ru_pool,
                     pg::ShotSpec::from_name(ru_shot, ru_shots), backend,
                     pg::eval_mode_from_string(ru_eval), ru_seed, ru_precision, ru_template,
                     ru_outdir, ru_run_id, ru_cache, privacy_p, ru_csv);
    }

    if (templates->parsed()) return cmd_templates(tp_outdir);

    if (report->parsed()) return cmd_report(re_runs, re_out_md, re_out_json);

    if (knn_fit->parsed())
      return cmd_knn_fit(kf_windows, kf_seed, kf_folds, kf_standardize, kf_out);

    if (knn_eval->parsed()) return cmd_knn_eval(ke_model, ke_windows, ke_records, ke_out);

    throw pg::ConfigError("no subcommand");
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const pg::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const pg::BackendError& e) {
    std::cerr << "backend error: " << e.what() << "\n";
    return 4;
  } catch (const pg::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
