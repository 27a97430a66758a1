#include "poisonguard/baseline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "poisonguard/errors.hpp"
#include "poisonguard/rng.hpp"
#include "poisonguard/simd/distance.hpp"

namespace pg {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::vector<float> standardize_row(const KnnModel& model, const std::vector<double>& values) {
  std::vector<float> row(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    float v = static_cast<float>(values[i]);
    if (model.standardized) v = (v - model.feature_mean[i]) / model.feature_scale[i];
    row[i] = v;
  }
  return row;
}

// Vote among the k nearest (distance, label) pairs. Ties on count break
// toward the larger total inverse-distance weight, then the smaller label
// index so results never depend on map iteration order.
std::int32_t vote(const std::vector<std::pair<float, std::int32_t>>& neighbors, int k,
                  std::size_t num_classes) {
  std::vector<int> counts(num_classes, 0);
  std::vector<double> weight(num_classes, 0.0);
  for (int i = 0; i < k && i < static_cast<int>(neighbors.size()); ++i) {
    const auto& [dist, label] = neighbors[static_cast<std::size_t>(i)];
    counts[static_cast<std::size_t>(label)]++;
    weight[static_cast<std::size_t>(label)] +=
        1.0 / (std::sqrt(static_cast<double>(dist)) + 1e-9);
  }
  std::int32_t best = 0;
  for (std::size_t c = 1; c < num_classes; ++c) {
    if (counts[c] > counts[static_cast<std::size_t>(best)] ||
        (counts[c] == counts[static_cast<std::size_t>(best)] &&
         weight[c] > weight[static_cast<std::size_t>(best)])) {
      best = static_cast<std::int32_t>(c);
    }
  }
  return best;
}

std::vector<std::pair<float, std::int32_t>> nearest(const KnnModel& model,
                                                    const std::vector<float>& query,
                                                    std::size_t limit) {
  std::vector<float> dists(model.size());
  simd::squared_distances(query.data(), model.features.data(), model.size(), model.dim,
                          dists.data());
  std::vector<std::size_t> order(model.size());
  std::iota(order.begin(), order.end(), 0);
  limit = std::min(limit, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(limit),
                    order.end(), [&](std::size_t a, std::size_t b) {
                      if (dists[a] != dists[b]) return dists[a] < dists[b];
                      return a < b;  // stable under distance ties
                    });
  std::vector<std::pair<float, std::int32_t>> out;
  out.reserve(limit);
  for (std::size_t i = 0; i < limit; ++i)
    out.emplace_back(dists[order[i]], model.labels[order[i]]);
  return out;
}

}  // namespace

std::string KnnModel::predict_sample(const SensorSample& sample) const {
  if (!trained()) throw UntrainedOracle();
  if (sample.values.size() != dim)
    throw SchemaMismatch("sample has " + std::to_string(sample.values.size()) +
                         " features, model expects " + std::to_string(dim));
  std::vector<float> query = standardize_row(*this, sample.values);
  auto neighbors = nearest(*this, query, static_cast<std::size_t>(k));
  return class_names[static_cast<std::size_t>(vote(neighbors, k, class_names.size()))];
}

std::string KnnModel::predict_window(const LabeledWindow& window) const {
  if (!trained()) throw UntrainedOracle();
  std::vector<int> counts(class_names.size(), 0);
  std::vector<double> weight(class_names.size(), 0.0);
  for (const auto& sample : window.samples) {
    if (sample.values.size() != dim)
      throw SchemaMismatch("window sample has " + std::to_string(sample.values.size()) +
                           " features, model expects " + std::to_string(dim));
    std::vector<float> query = standardize_row(*this, sample.values);
    auto neighbors = nearest(*this, query, static_cast<std::size_t>(k));
    for (int i = 0; i < k && i < static_cast<int>(neighbors.size()); ++i) {
      weight[static_cast<std::size_t>(neighbors[static_cast<std::size_t>(i)].second)] +=
          1.0 / (std::sqrt(static_cast<double>(neighbors[static_cast<std::size_t>(i)].first)) +
                 1e-9);
    }
    counts[static_cast<std::size_t>(vote(neighbors, k, class_names.size()))]++;
  }
  // Majority of per-sample labels; ties fall back to inverse-distance weight.
  std::size_t best = 0;
  for (std::size_t c = 1; c < counts.size(); ++c) {
    if (counts[c] > counts[best] || (counts[c] == counts[best] && weight[c] > weight[best]))
      best = c;
  }
  return class_names[best];
}

KnnFitOptions KnnFitOptions::defaults(std::uint64_t seed) {
  KnnFitOptions o;
  for (int k = 1; k <= 29; k += 2) o.k_grid.push_back(k);
  o.folds = 5;
  o.seed = seed;
  return o;
}

KnnModel knn_fit(const std::vector<SensorSample>& samples,
                 const std::vector<std::string>& labels, const KnnFitOptions& options,
                 KnnFitReport* report) {
  auto start = Clock::now();
  if (samples.empty() || samples.size() != labels.size())
    throw DataError("knn_fit needs a non-empty, aligned sample/label set");
  KnnFitOptions opts = options;
  if (opts.k_grid.empty()) opts = KnnFitOptions::defaults(options.seed);
  for (int k : opts.k_grid) {
    if (k < 1 || k > 29 || k % 2 == 0)
      throw ConfigError("k grid entries must be odd and in [1, 29]");
  }

  KnnModel model;
  model.dim = samples[0].values.size();
  std::map<std::string, std::int32_t> class_index;
  for (const auto& l : labels) {
    if (!class_index.count(l)) {
      class_index[l] = static_cast<std::int32_t>(model.class_names.size());
      model.class_names.push_back(l);
    }
  }
  model.labels.reserve(samples.size());
  model.features.reserve(samples.size() * model.dim);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].values.size() != model.dim)
      throw SchemaMismatch("inconsistent feature count in training samples");
    for (double v : samples[i].values) model.features.push_back(static_cast<float>(v));
    model.labels.push_back(class_index[labels[i]]);
  }

  if (opts.standardize) {
    model.standardized = true;
    model.feature_mean.assign(model.dim, 0.0f);
    model.feature_scale.assign(model.dim, 1.0f);
    std::vector<double> mean(model.dim, 0.0), var(model.dim, 0.0);
    std::size_t n = model.size();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t d = 0; d < model.dim; ++d)
        mean[d] += model.features[i * model.dim + d];
    for (std::size_t d = 0; d < model.dim; ++d) mean[d] /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t d = 0; d < model.dim; ++d) {
        double diff = model.features[i * model.dim + d] - mean[d];
        var[d] += diff * diff;
      }
    for (std::size_t d = 0; d < model.dim; ++d) {
      double sd = std::sqrt(var[d] / static_cast<double>(n));
      model.feature_mean[d] = static_cast<float>(mean[d]);
      model.feature_scale[d] = sd > 1e-12 ? static_cast<float>(sd) : 1.0f;
    }
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t d = 0; d < model.dim; ++d) {
        float& v = model.features[i * model.dim + d];
        v = (v - model.feature_mean[d]) / model.feature_scale[d];
      }
  }

  // Stratified folds: per-class seeded shuffle, then round-robin assignment.
  const std::size_t n = model.size();
  const int folds = opts.folds;
  std::vector<int> fold_of(n, 0);
  {
    std::map<std::int32_t, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < n; ++i) by_class[model.labels[i]].push_back(i);
    for (auto& [cls, idx] : by_class) {
      if (idx.size() < static_cast<std::size_t>(folds))
        throw ClassTooSmall(model.class_names[static_cast<std::size_t>(cls)], idx.size(),
                            static_cast<std::size_t>(folds));
      rng::Stream stream =
          rng::derive(opts.seed, "knn_fold:" + model.class_names[static_cast<std::size_t>(cls)]);
      stream.shuffle(idx);
      for (std::size_t i = 0; i < idx.size(); ++i)
        fold_of[idx[i]] = static_cast<int>(i % static_cast<std::size_t>(folds));
    }
  }

  const int max_k = *std::max_element(opts.k_grid.begin(), opts.k_grid.end());
  std::map<int, double> mean_acc;
  for (int k : opts.k_grid) mean_acc[k] = 0.0;

  for (int fold = 0; fold < folds; ++fold) {
    std::vector<float> train_feat;
    std::vector<std::int32_t> train_lab;
    std::vector<std::size_t> val_idx;
    for (std::size_t i = 0; i < n; ++i) {
      if (fold_of[i] == fold) {
        val_idx.push_back(i);
      } else {
        train_feat.insert(train_feat.end(), model.features.begin() + static_cast<std::ptrdiff_t>(i * model.dim),
                          model.features.begin() + static_cast<std::ptrdiff_t>((i + 1) * model.dim));
        train_lab.push_back(model.labels[i]);
      }
    }
    const std::size_t train_n = train_lab.size();
    std::map<int, std::size_t> correct;
    for (int k : opts.k_grid) correct[k] = 0;

    std::vector<float> dists(train_n);
    std::vector<std::size_t> order(train_n);
    for (std::size_t vi : val_idx) {
      const float* q = model.features.data() + vi * model.dim;
      simd::squared_distances(q, train_feat.data(), train_n, model.dim, dists.data());
      std::iota(order.begin(), order.end(), 0);
      std::size_t limit = std::min<std::size_t>(static_cast<std::size_t>(max_k), train_n);
      std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(limit),
                        order.end(), [&](std::size_t a, std::size_t b) {
                          if (dists[a] != dists[b]) return dists[a] < dists[b];
                          return a < b;
                        });
      std::vector<std::pair<float, std::int32_t>> neighbors;
      neighbors.reserve(limit);
      for (std::size_t i = 0; i < limit; ++i)
        neighbors.emplace_back(dists[order[i]], train_lab[order[i]]);
      for (int k : opts.k_grid) {
        if (vote(neighbors, k, model.class_names.size()) == model.labels[vi]) ++correct[k];
      }
    }
    for (int k : opts.k_grid)
      mean_acc[k] += static_cast<double>(correct[k]) / static_cast<double>(val_idx.size());
  }
  for (auto& [k, acc] : mean_acc) acc /= static_cast<double>(folds);

  // Highest mean fold accuracy wins; ties break toward the smaller k.
  int best_k = opts.k_grid.front();
  for (int k : opts.k_grid) {
    if (mean_acc[k] > mean_acc[best_k]) best_k = k;
  }
  model.k = best_k;

  if (report) {
    report->chosen_k = best_k;
    report->mean_fold_accuracy = mean_acc;
    report->train_size = n;
    report->fit_seconds = seconds_since(start);
  }
  return model;
}

KnnModel knn_fit_windows(const std::vector<LabeledWindow>& windows,
                         const KnnFitOptions& options, KnnFitReport* report) {
  std::vector<SensorSample> samples;
  std::vector<std::string> labels;
  for (const auto& w : windows) {
    for (const auto& s : w.samples) {
      samples.push_back(s);
      labels.push_back(w.label);
    }
  }
  return knn_fit(samples, labels, options, report);
}

void KnnModel::save(const std::string& path) const {
  io::ordered_json meta;
  meta["format"] = "pg-knn-1";
  meta["k"] = k;
  meta["dim"] = dim;
  meta["count"] = labels.size();
  meta["class_names"] = class_names;
  meta["standardized"] = standardized;
  if (standardized) {
    meta["feature_mean"] = feature_mean;
    meta["feature_scale"] = feature_scale;
  }
  std::string blob = meta.dump();
  blob += '\n';
  // Packed little-endian payload after the metadata line: int32 labels, then
  // float32 features.
  blob.append(reinterpret_cast<const char*>(labels.data()),
              labels.size() * sizeof(std::int32_t));
  blob.append(reinterpret_cast<const char*>(features.data()),
              features.size() * sizeof(float));
  io::atomic_write(path, blob);
}

KnnModel KnnModel::load(const std::string& path) {
  std::string blob = io::read_file(path);
  std::size_t nl = blob.find('\n');
  if (nl == std::string::npos) throw DataError("malformed model file: " + path);
  io::ordered_json meta = io::ordered_json::parse(blob.substr(0, nl));
  if (meta.value("format", "") != "pg-knn-1")
    throw DataError("unsupported model format in " + path);

  KnnModel m;
  m.k = meta.at("k").get<int>();
  m.dim = meta.at("dim").get<std::size_t>();
  std::size_t count = meta.at("count").get<std::size_t>();
  m.class_names = meta.at("class_names").get<std::vector<std::string>>();
  m.standardized = meta.at("standardized").get<bool>();
  if (m.standardized) {
    m.feature_mean = meta.at("feature_mean").get<std::vector<float>>();
    m.feature_scale = meta.at("feature_scale").get<std::vector<float>>();
  }
  std::size_t offset = nl + 1;
  std::size_t labels_bytes = count * sizeof(std::int32_t);
  std::size_t feature_bytes = count * m.dim * sizeof(float);
  if (blob.size() != offset + labels_bytes + feature_bytes)
    throw DataError("model payload size mismatch in " + path);
  m.labels.resize(count);
  std::memcpy(m.labels.data(), blob.data() + offset, labels_bytes);
  m.features.resize(count * m.dim);
  std::memcpy(m.features.data(), blob.data() + offset + labels_bytes, feature_bytes);
  return m;
}

double BaselineReport::detection_accuracy() const {
  if (total_windows == 0) return 0.0;
  return static_cast<double>(total_detected) / static_cast<double>(total_windows);
}

double BaselineReport::sanitization_rate() const {
  if (total_windows == 0) return 0.0;
  return static_cast<double>(total_sanitize_correct) / static_cast<double>(total_windows);
}

io::ordered_json BaselineReport::to_json() const {
  io::ordered_json j;
  j["chosen_k"] = chosen_k;
  io::ordered_json folds = io::ordered_json::object();
  for (const auto& [k, acc] : mean_fold_accuracy) folds[std::to_string(k)] = acc;
  j["mean_fold_accuracy"] = std::move(folds);
  io::ordered_json per = io::ordered_json::object();
  for (const auto& [activity, s] : per_activity) {
    double denom = s.windows ? static_cast<double>(s.windows) : 1.0;
    per[activity] = {{"windows", s.windows},
                     {"detected", s.detected},
                     {"sanitize_correct", s.sanitize_correct},
                     {"recall", static_cast<double>(s.detected) / denom},
                     {"accuracy", static_cast<double>(s.sanitize_correct) / denom}};
  }
  j["per_activity"] = std::move(per);
  j["total_windows"] = total_windows;
  j["total_detected"] = total_detected;
  j["total_sanitize_correct"] = total_sanitize_correct;
  j["detection_accuracy"] = detection_accuracy();
  j["sanitization_rate"] = sanitization_rate();
  j["train_size"] = train_size;
  j["fit_seconds"] = fit_seconds;
  j["eval_seconds"] = eval_seconds;
  return j;
}

BaselineReport evaluate_baseline(const KnnModel& model,
                                 const std::vector<LabeledWindow>& poisoned_windows,
                                 const std::vector<PoisonRecord>& records,
                                 const KnnFitReport* fit) {
  auto start = Clock::now();
  std::map<std::string, const PoisonRecord*> by_id;
  for (const auto& r : records) by_id[r.window_id] = &r;

  BaselineReport report;
  report.chosen_k = model.k;
  report.train_size = model.size();
  if (fit) {
    report.mean_fold_accuracy = fit->mean_fold_accuracy;
    report.fit_seconds = fit->fit_seconds;
  }

  for (const auto& w : poisoned_windows) {
    auto it = by_id.find(w.window_id);
    const std::string reported = w.label;
    const std::string truth = it != by_id.end() ? it->second->true_label : reported;
    std::string predicted = model.predict_window(w);

    ActivityScore& score = report.per_activity[truth];
    score.windows++;
    report.total_windows++;
    if (predicted != reported) {
      score.detected++;
      report.total_detected++;
    }
    if (predicted == truth) {
      score.sanitize_correct++;
      report.total_sanitize_correct++;
    }
  }
  report.eval_seconds = seconds_since(start);
  return report;
}

}  // namespace pg
