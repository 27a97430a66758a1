#include "poisonguard/synth.hpp"

#include <cmath>
#include <numbers>

#include "poisonguard/errors.hpp"
#include "poisonguard/rng.hpp"
#include "poisonguard/text.hpp"

namespace pg {

namespace {

struct ChannelShape {
  double mean = 0.0;
  double amplitude = 0.0;
  double noise = 0.02;
};

struct ActivityShape {
  double frequency_hz = 0.0;  // 0 for static postures
  std::vector<ChannelShape> channels;
};

constexpr double kSampleRateHz = 50.0;

// Channel order matches DatasetSchema::builtin. Postures differ in standing
// orientation; gaits differ in cadence and energy; stairs differ in pitch
// sign so up and down stay separable.
ActivityShape motionsense_shape(const std::string& activity) {
  auto ch = [](double mean, double amp, double noise) { return ChannelShape{mean, amp, noise}; };
  if (activity == "Standing")
    return {0.0,
            {ch(0.05, 0.01, 0.02), ch(0.02, 0.01, 0.02), ch(0.00, 0.01, 0.02),
             ch(0.02, 0.00, 0.01), ch(0.02, 0.00, 0.01), ch(-0.99, 0.00, 0.01),
             ch(0.00, 0.01, 0.02), ch(0.00, 0.01, 0.02), ch(0.00, 0.01, 0.02),
             ch(0.00, 0.01, 0.02), ch(0.00, 0.01, 0.02), ch(0.00, 0.01, 0.02)}};
  if (activity == "Sitting")
    return {0.0,
            {ch(0.15, 0.01, 0.02), ch(1.10, 0.01, 0.02), ch(0.30, 0.01, 0.02),
             ch(0.05, 0.00, 0.01), ch(0.72, 0.00, 0.01), ch(-0.68, 0.00, 0.01),
             ch(0.00, 0.01, 0.02), ch(0.00, 0.01, 0.02), ch(0.00, 0.01, 0.02),
             ch(0.00, 0.01, 0.02), ch(0.00, 0.01, 0.02), ch(0.00, 0.01, 0.02)}};
  if (activity == "Walking")
    return {2.0,
            {ch(0.20, 0.08, 0.05), ch(0.35, 0.08, 0.05), ch(0.00, 0.10, 0.05),
             ch(0.05, 0.04, 0.03), ch(0.25, 0.04, 0.03), ch(-0.93, 0.03, 0.03),
             ch(0.00, 0.80, 0.10), ch(0.00, 0.60, 0.10), ch(0.00, 0.50, 0.10),
             ch(0.00, 0.25, 0.06), ch(0.00, 0.30, 0.06), ch(0.00, 0.20, 0.06)}};
  if (activity == "Jogging")
    return {2.8,
            {ch(0.25, 0.18, 0.09), ch(0.40, 0.18, 0.09), ch(0.00, 0.22, 0.09),
             ch(0.08, 0.08, 0.05), ch(0.28, 0.08, 0.05), ch(-0.90, 0.06, 0.05),
             ch(0.00, 2.20, 0.20), ch(0.00, 1.80, 0.20), ch(0.00, 1.50, 0.20),
             ch(0.00, 0.85, 0.12), ch(0.00, 1.00, 0.12), ch(0.00, 0.70, 0.12)}};
  if (activity == "Upstairs")
    return {1.5,
            {ch(0.25, 0.10, 0.06), ch(0.68, 0.10, 0.06), ch(0.10, 0.10, 0.06),
             ch(0.06, 0.05, 0.03), ch(0.52, 0.05, 0.03), ch(-0.83, 0.04, 0.03),
             ch(0.00, 1.00, 0.12), ch(0.00, 0.80, 0.12), ch(0.00, 0.60, 0.12),
             ch(0.00, 0.35, 0.07), ch(0.05, 0.45, 0.07), ch(0.00, 0.30, 0.07)}};
  if (activity == "Downstairs")
    return {1.8,
            {ch(0.20, 0.12, 0.06), ch(-0.15, 0.12, 0.06), ch(0.10, 0.12, 0.06),
             ch(0.05, 0.05, 0.03), ch(-0.12, 0.05, 0.03), ch(-0.97, 0.04, 0.03),
             ch(0.00, 1.20, 0.12), ch(0.00, 0.95, 0.12), ch(0.00, 0.70, 0.12),
             ch(0.00, 0.50, 0.07), ch(-0.05, 0.55, 0.07), ch(0.00, 0.40, 0.07)}};
  throw ConfigError("no synthetic shape for activity: " + activity);
}

ActivityShape hhar_shape(const std::string& activity) {
  auto ch = [](double mean, double amp, double noise) { return ChannelShape{mean, amp, noise}; };
  if (activity == "Standing")
    return {0.0, {ch(0.02, 0.01, 0.02), ch(0.02, 0.01, 0.02), ch(0.99, 0.01, 0.02),
                  ch(0.00, 0.01, 0.02), ch(0.00, 0.01, 0.02), ch(0.00, 0.01, 0.02)}};
  if (activity == "Sitting")
    return {0.0, {ch(0.05, 0.01, 0.02), ch(0.70, 0.01, 0.02), ch(0.70, 0.01, 0.02),
                  ch(0.00, 0.01, 0.02), ch(0.00, 0.01, 0.02), ch(0.00, 0.01, 0.02)}};
  if (activity == "Walking")
    return {2.0, {ch(0.05, 0.25, 0.06), ch(0.10, 0.30, 0.06), ch(0.93, 0.20, 0.06),
                  ch(0.00, 0.80, 0.10), ch(0.00, 0.60, 0.10), ch(0.00, 0.50, 0.10)}};
  if (activity == "Biking")
    return {1.2, {ch(0.30, 0.30, 0.08), ch(0.55, 0.35, 0.08), ch(0.70, 0.25, 0.08),
                  ch(0.00, 1.50, 0.15), ch(0.00, 0.40, 0.15), ch(0.00, 0.60, 0.15)}};
  if (activity == "Stairsup")
    return {1.5, {ch(0.06, 0.35, 0.07), ch(0.50, 0.45, 0.07), ch(0.82, 0.25, 0.07),
                  ch(0.00, 1.00, 0.12), ch(0.05, 0.80, 0.12), ch(0.00, 0.60, 0.12)}};
  if (activity == "Stairsdown")
    return {1.8, {ch(0.05, 0.45, 0.07), ch(-0.12, 0.50, 0.07), ch(0.97, 0.30, 0.07),
                  ch(0.00, 1.20, 0.12), ch(-0.05, 0.95, 0.12), ch(0.00, 0.70, 0.12)}};
  throw ConfigError("no synthetic shape for activity: " + activity);
}

ActivityShape wisdm_shape(const std::string& activity) {
  auto ch = [](double mean, double amp, double noise) { return ChannelShape{mean, amp, noise}; };
  if (activity == "Standing")
    return {0.0, {ch(0.2, 0.02, 0.05), ch(9.78, 0.02, 0.05), ch(0.2, 0.02, 0.05)}};
  if (activity == "Sitting")
    return {0.0, {ch(0.3, 0.02, 0.05), ch(6.90, 0.02, 0.05), ch(6.90, 0.02, 0.05)}};
  if (activity == "Walking")
    return {2.0, {ch(0.5, 2.50, 0.40), ch(9.60, 3.00, 0.40), ch(0.8, 2.00, 0.40)}};
  if (activity == "Jogging")
    return {2.8, {ch(0.8, 6.50, 0.80), ch(9.40, 7.50, 0.80), ch(1.0, 5.00, 0.80)}};
  if (activity == "Upstairs")
    return {1.5, {ch(1.8, 3.50, 0.50), ch(8.60, 4.00, 0.50), ch(0.9, 2.80, 0.50)}};
  if (activity == "Downstairs")
    return {1.8, {ch(-1.2, 4.20, 0.50), ch(9.95, 4.60, 0.50), ch(1.1, 3.30, 0.50)}};
  throw ConfigError("no synthetic shape for activity: " + activity);
}

ActivityShape shape_for(const DatasetSchema& schema, const std::string& activity) {
  std::string n = text::lower(schema.name);
  if (n == "motionsense") return motionsense_shape(activity);
  if (n == "hhar") return hhar_shape(activity);
  if (n == "wisdm") return wisdm_shape(activity);
  throw ConfigError("synthetic generation only covers the built-in layouts, got " +
                    schema.name);
}

double gaussian(rng::Stream& stream) {
  // Box-Muller; u clamped away from 0.
  double u = stream.uniform();
  double v = stream.uniform();
  if (u < 1e-12) u = 1e-12;
  return std::sqrt(-2.0 * std::log(u)) *
         std::cos(2.0 * std::numbers::pi * v);
}

}  // namespace

std::vector<LabeledRow> synth_rows(const DatasetSchema& schema, const SynthOptions& options) {
  schema.validate();
  std::vector<LabeledRow> rows;
  rows.reserve(options.samples_per_class * schema.label_set.size());

  for (const auto& activity : schema.label_set) {
    ActivityShape shape = shape_for(schema, activity);
    if (shape.channels.size() != schema.feature_count())
      throw ConfigError("synthetic shape width mismatch for " + activity);
    rng::Stream stream = rng::derive(options.seed, "synth:" + schema.name + ":" + activity);
    double phase0 = stream.uniform() * 2.0 * std::numbers::pi;
    for (std::size_t i = 0; i < options.samples_per_class; ++i) {
      LabeledRow row;
      row.label = activity;
      row.subject = options.subject;
      row.sample.values.reserve(shape.channels.size());
      double t = static_cast<double>(i) / kSampleRateHz;
      for (std::size_t c = 0; c < shape.channels.size(); ++c) {
        const ChannelShape& ch = shape.channels[c];
        double osc = 0.0;
        if (shape.frequency_hz > 0.0 && ch.amplitude != 0.0) {
          // Per-channel phase offset keeps the channels correlated but not
          // redundant copies of one sine.
          double phase = phase0 + 0.7 * static_cast<double>(c);
          osc = ch.amplitude *
                std::sin(2.0 * std::numbers::pi * shape.frequency_hz * t + phase);
        }
        double value = ch.mean + osc + options.noise_scale * ch.noise * gaussian(stream);
        row.sample.values.push_back(value);
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

std::string synth_csv(const DatasetSchema& schema, const SynthOptions& options) {
  std::vector<LabeledRow> rows = synth_rows(schema, options);
  std::string out = schema.label_column;
  if (!schema.subject_column.empty()) out += "," + schema.subject_column;
  out += ",timestamp";
  for (const auto& col : schema.feature_columns) out += "," + col;
  out += '\n';
  std::size_t t = 0;
  for (const auto& row : rows) {
    out += row.label;
    if (!schema.subject_column.empty()) out += "," + row.subject;
    out += "," + std::to_string(t++);
    for (double v : row.sample.values) out += "," + text::format_significant(v, 8);
    out += '\n';
  }
  return out;
}

}  // namespace pg
