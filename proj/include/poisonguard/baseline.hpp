#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "poisonguard/attack.hpp"
#include "poisonguard/dataset.hpp"

namespace pg {

// Exact k-nearest-neighbors over raw per-sample feature vectors, Euclidean
// distance. Window verdicts come from per-sample classification plus a
// majority vote, so one 100-sample test segment yields one label.
struct KnnModel {
  int k = 1;
  std::size_t dim = 0;
  std::vector<std::string> class_names;     // canonical activity spellings
  std::vector<float> features;              // n x dim, row-major
  std::vector<std::int32_t> labels;         // index into class_names
  bool standardized = false;
  std::vector<float> feature_mean;          // set when standardized
  std::vector<float> feature_scale;

  bool trained() const { return !features.empty(); }
  std::size_t size() const { return dim == 0 ? 0 : labels.size(); }

  std::string predict_sample(const SensorSample& sample) const;
  std::string predict_window(const LabeledWindow& window) const;

  void save(const std::string& path) const;
  static KnnModel load(const std::string& path);
};

struct KnnFitReport {
  int chosen_k = 1;
  std::map<int, double> mean_fold_accuracy;  // k -> mean accuracy over folds
  std::size_t train_size = 0;
  double fit_seconds = 0.0;
};

struct KnnFitOptions {
  std::vector<int> k_grid;   // defaults to odd 1..29
  int folds = 5;
  std::uint64_t seed = 0;
  bool standardize = false;  // z-score fit on training data only

  static KnnFitOptions defaults(std::uint64_t seed = 0);
};

KnnModel knn_fit(const std::vector<SensorSample>& samples,
                 const std::vector<std::string>& labels, const KnnFitOptions& options,
                 KnnFitReport* report = nullptr);

// Convenience: trains on the per-sample contents of clean windows.
KnnModel knn_fit_windows(const std::vector<LabeledWindow>& windows,
                         const KnnFitOptions& options, KnnFitReport* report = nullptr);

struct ActivityScore {
  std::size_t windows = 0;
  std::size_t detected = 0;          // predicted != reported label
  std::size_t sanitize_correct = 0;  // predicted == true label
};

struct BaselineReport {
  int chosen_k = 1;
  std::map<int, double> mean_fold_accuracy;
  std::map<std::string, ActivityScore> per_activity;  // keyed by true label
  std::size_t total_windows = 0;
  std::size_t total_detected = 0;
  std::size_t total_sanitize_correct = 0;
  std::size_t train_size = 0;
  double fit_seconds = 0.0;
  double eval_seconds = 0.0;

  double detection_accuracy() const;
  double sanitization_rate() const;
  io::ordered_json to_json() const;
};

// Scores the model over poisoned windows: a window counts as detected when
// the prediction disagrees with its reported (possibly flipped) label and as
// correctly sanitized when the prediction recovers the true label.
BaselineReport evaluate_baseline(const KnnModel& model,
                                 const std::vector<LabeledWindow>& poisoned_windows,
                                 const std::vector<PoisonRecord>& records,
                                 const KnnFitReport* fit = nullptr);

}  // namespace pg
