#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>

#include "poisonguard/baseline.hpp"
#include "poisonguard/errors.hpp"
#include "poisonguard/rng.hpp"

using namespace pg;

namespace {

std::vector<SensorSample> points_1d(const std::vector<double>& xs) {
  std::vector<SensorSample> out;
  for (double x : xs) out.push_back({{x}});
  return out;
}

LabeledWindow window_of(const std::vector<double>& xs, const std::string& label,
                        const std::string& id) {
  LabeledWindow w;
  w.window_id = id;
  w.label = label;
  for (double x : xs) w.samples.push_back({{x}});
  return w;
}

// Brute-force cross-validation oracle: same fold derivation, plain double
// arithmetic, independent of the production distance and voting code.
int oracle_best_k(const std::vector<SensorSample>& samples,
                  const std::vector<std::string>& labels, const std::vector<int>& k_grid,
                  int folds, std::uint64_t seed, std::map<int, double>* accuracy_out) {
  std::map<std::string, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < samples.size(); ++i) by_class[labels[i]].push_back(i);
  std::vector<int> fold_of(samples.size());
  for (auto& [cls, idx] : by_class) {
    rng::Stream stream = rng::derive(seed, "knn_fold:" + cls);
    stream.shuffle(idx);
    for (std::size_t i = 0; i < idx.size(); ++i)
      fold_of[idx[i]] = static_cast<int>(i % static_cast<std::size_t>(folds));
  }
  std::map<int, double> acc;
  for (int fold = 0; fold < folds; ++fold) {
    std::vector<std::size_t> train, val;
    for (std::size_t i = 0; i < samples.size(); ++i)
      (fold_of[i] == fold ? val : train).push_back(i);
    std::map<int, std::size_t> correct;
    for (std::size_t vi : val) {
      std::vector<std::pair<double, std::size_t>> dist;
      for (std::size_t ti : train) {
        double d = 0;
        for (std::size_t c = 0; c < samples[vi].values.size(); ++c) {
          double diff = samples[vi].values[c] - samples[ti].values[c];
          d += diff * diff;
        }
        dist.emplace_back(d, ti);
      }
      std::sort(dist.begin(), dist.end());
      for (int k : k_grid) {
        std::map<std::string, int> votes;
        for (int i = 0; i < k && i < static_cast<int>(dist.size()); ++i)
          votes[labels[dist[static_cast<std::size_t>(i)].second]]++;
        std::string best;
        int best_votes = -1;
        for (const auto& [label, v] : votes) {
          if (v > best_votes) {
            best = label;
            best_votes = v;
          }
        }
        if (best == labels[vi]) correct[k]++;
      }
    }
    for (int k : k_grid)
      acc[k] += static_cast<double>(correct[k]) / static_cast<double>(val.size());
  }
  int best_k = k_grid.front();
  for (int k : k_grid) {
    acc[k] /= folds;
    if (acc[k] > acc[best_k]) best_k = k;
  }
  if (accuracy_out) *accuracy_out = acc;
  return best_k;
}

}  // namespace

TEST_CASE("well-separated blobs tie every k, so the smallest wins") {
  rng::Stream stream(8);
  std::vector<SensorSample> samples;
  std::vector<std::string> labels;
  for (int i = 0; i < 30; ++i) {
    samples.push_back({{stream.uniform() * 0.5, stream.uniform() * 0.5}});
    labels.push_back("A");
    samples.push_back({{10.0 + stream.uniform() * 0.5, 10.0 + stream.uniform() * 0.5}});
    labels.push_back("B");
  }
  KnnFitOptions options = KnnFitOptions::defaults(3);
  KnnFitReport report;
  KnnModel model = knn_fit(samples, labels, options, &report);
  CHECK(model.k == 1);
  for (const auto& [k, acc] : report.mean_fold_accuracy) CHECK(acc == 1.0);
}

TEST_CASE("a mislabeled point pushes the chosen k above 1") {
  // Five A points on a pentagon of radius 0.1 with a mislabeled B at its
  // center: the center is nearer to every A point (0.1) than its pentagon
  // neighbors are (2*0.1*sin 36 = 0.118), so whenever the outlier is in the
  // training fold, k=1 flips every validation A while k=3 outvotes it.
  std::vector<SensorSample> samples;
  std::vector<std::string> labels;
  const double pi = 3.14159265358979323846;
  for (int i = 0; i < 5; ++i) {
    double theta = 2.0 * pi * i / 5.0;
    samples.push_back({{0.1 * std::cos(theta), 0.1 * std::sin(theta)}});
    labels.push_back("A");
    samples.push_back({{5.0 + 0.1 * std::cos(theta), 5.0 + 0.1 * std::sin(theta)}});
    labels.push_back("B");
  }
  samples.push_back({{0.0, 0.0}});  // B stranded in the middle of A
  labels.push_back("B");

  std::vector<int> grid = {1, 3, 5};
  KnnFitOptions options;
  options.k_grid = grid;
  options.folds = 3;
  options.seed = 17;

  std::map<int, double> oracle_acc;
  int oracle_k = oracle_best_k(samples, labels, grid, 3, 17, &oracle_acc);
  REQUIRE(oracle_acc.at(3) > oracle_acc.at(1));  // the instance really does it
  CHECK(oracle_k == 3);

  KnnFitReport report;
  KnnModel model = knn_fit(samples, labels, options, &report);
  CHECK(model.k == oracle_k);
  for (int k : grid)
    CHECK(report.mean_fold_accuracy.at(k) == doctest::Approx(oracle_acc.at(k)));
}

TEST_CASE("fit preconditions") {
  std::vector<SensorSample> samples = points_1d({0, 1, 2, 3});
  std::vector<std::string> labels = {"A", "A", "A", "B"};
  KnnFitOptions options = KnnFitOptions::defaults(1);
  options.folds = 5;
  CHECK_THROWS_AS(knn_fit(samples, labels, options), ClassTooSmall);

  options.folds = 2;
  options.k_grid = {2};
  CHECK_THROWS_AS(knn_fit(points_1d({0, 1, 2, 3}), {"A", "A", "B", "B"}, options),
                  ConfigError);
}

TEST_CASE("window prediction by per-sample majority") {
  KnnModel model;
  model.k = 1;
  model.dim = 1;
  model.class_names = {"Walking", "Jogging"};
  for (int i = 0; i < 20; ++i) {
    model.features.push_back(static_cast<float>(i) * 0.01f);          // Walking near 0
    model.labels.push_back(0);
    model.features.push_back(10.0f + static_cast<float>(i) * 0.01f);  // Jogging near 10
    model.labels.push_back(1);
  }

  SUBCASE("unanimous window") {
    std::vector<double> xs(100, 0.05);
    CHECK(model.predict_window(window_of(xs, "?", "w")) == "Walking");
  }
  SUBCASE("60/40 split goes to the majority") {
    std::vector<double> xs;
    for (int i = 0; i < 60; ++i) xs.push_back(0.05);
    for (int i = 0; i < 40; ++i) xs.push_back(10.05);
    CHECK(model.predict_window(window_of(xs, "?", "w")) == "Walking");
  }
  SUBCASE("training points come back exactly under k=1") {
    for (std::size_t i = 0; i < model.size(); ++i) {
      SensorSample s{{static_cast<double>(model.features[i])}};
      CHECK(model.predict_sample(s) ==
            model.class_names[static_cast<std::size_t>(model.labels[i])]);
    }
  }
  SUBCASE("schema mismatch rejected") {
    SensorSample wide{{0.0, 1.0}};
    CHECK_THROWS_AS(model.predict_sample(wide), SchemaMismatch);
  }
}

TEST_CASE("fitting is deterministic in the seed") {
  rng::Stream stream(66);
  std::vector<SensorSample> samples;
  std::vector<std::string> labels;
  for (int i = 0; i < 60; ++i) {
    double base = (i % 3) * 2.0;
    samples.push_back({{base + stream.uniform() * 0.8, base + stream.uniform() * 0.8}});
    labels.push_back(std::string(1, static_cast<char>('A' + i % 3)));
  }
  KnnFitOptions options = KnnFitOptions::defaults(1234);
  options.folds = 4;
  KnnFitReport r1, r2;
  KnnModel m1 = knn_fit(samples, labels, options, &r1);
  KnnModel m2 = knn_fit(samples, labels, options, &r2);
  CHECK(m1.k == m2.k);
  CHECK(r1.mean_fold_accuracy == r2.mean_fold_accuracy);
  for (const auto& s : samples) CHECK(m1.predict_sample(s) == m2.predict_sample(s));
}

TEST_CASE("model persists and reloads") {
  std::vector<SensorSample> samples;
  std::vector<std::string> labels;
  rng::Stream stream(4);
  for (int i = 0; i < 40; ++i) {
    samples.push_back({{stream.uniform(), stream.uniform() + (i % 2 ? 4.0 : 0.0)}});
    labels.push_back(i % 2 ? "B" : "A");
  }
  KnnFitOptions options = KnnFitOptions::defaults(9);
  options.k_grid = {1, 3};
  options.folds = 4;
  KnnModel model = knn_fit(samples, labels, options);

  auto path = std::filesystem::temp_directory_path() / "pg_model.knn";
  model.save(path.string());
  KnnModel loaded = KnnModel::load(path.string());
  CHECK(loaded.k == model.k);
  CHECK(loaded.dim == model.dim);
  CHECK(loaded.class_names == model.class_names);
  CHECK(loaded.features == model.features);
  CHECK(loaded.labels == model.labels);
  for (const auto& s : samples) CHECK(loaded.predict_sample(s) == model.predict_sample(s));
}

TEST_CASE("standardization changes the stored features, not the interface") {
  std::vector<SensorSample> samples;
  std::vector<std::string> labels;
  for (int i = 0; i < 12; ++i) {
    samples.push_back({{static_cast<double>(i % 2 ? 1000 : 0), i % 2 ? 0.001 : 0.0}});
    labels.push_back(i % 2 ? "B" : "A");
  }
  KnnFitOptions options;
  options.k_grid = {1};
  options.folds = 2;
  options.standardize = true;
  KnnModel model = knn_fit(samples, labels, options);
  CHECK(model.standardized);
  CHECK(model.predict_sample({{1000.0, 0.001}}) == "B");
  CHECK(model.predict_sample({{0.0, 0.0}}) == "A");
}

TEST_CASE("baseline evaluation scores detection and sanitization per activity") {
  KnnModel model;
  model.k = 1;
  model.dim = 1;
  model.class_names = {"A", "B"};
  model.features = {0.0f, 10.0f};
  model.labels = {0, 1};

  SUBCASE("detected and sanitized") {
    // True A windows reported as B: prediction A disagrees with B (detected)
    // and recovers the truth.
    std::vector<LabeledWindow> windows = {window_of({0.1, 0.2}, "B", "w1"),
                                          window_of({0.0, 0.1}, "B", "w2")};
    std::vector<PoisonRecord> records = {{"w1", "A", "B", AttackStrategy::Random},
                                         {"w2", "A", "B", AttackStrategy::Random}};
    BaselineReport report = evaluate_baseline(model, windows, records);
    CHECK(report.total_windows == 2);
    CHECK(report.detection_accuracy() == 1.0);
    CHECK(report.sanitization_rate() == 1.0);
    std::size_t windows_sum = 0;
    for (const auto& [_, s] : report.per_activity) windows_sum += s.windows;
    CHECK(windows_sum == report.total_windows);
  }
  SUBCASE("a predictor that matches the reported label detects nothing") {
    // True B windows flipped to A, but the sensor payload sits in A territory,
    // so the prediction equals the reported label.
    std::vector<LabeledWindow> windows = {window_of({0.0}, "A", "w1")};
    std::vector<PoisonRecord> records = {{"w1", "B", "A", AttackStrategy::Random}};
    BaselineReport report = evaluate_baseline(model, windows, records);
    CHECK(report.detection_accuracy() == 0.0);
    CHECK(report.sanitization_rate() == 0.0);
  }
}
