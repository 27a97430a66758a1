#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "poisonguard/dataset.hpp"

namespace pg {

// Synthetic wearable-sensor surrogate for the three built-in dataset layouts.
// Each activity gets a distinct quasi-periodic multichannel signature (static
// orientation for the postures, oscillation frequency and amplitude for the
// gaits) plus Gaussian noise, which is enough structure for nearest-neighbor
// separation at desk scale without shipping any real recordings.
struct SynthOptions {
  std::size_t samples_per_class = 2000;
  std::uint64_t seed = 0;
  double noise_scale = 1.0;
  std::string subject = "s01";
};

// Rows come out grouped by activity, in label_set order, so windowing keeps
// every window single-activity.
std::vector<LabeledRow> synth_rows(const DatasetSchema& schema, const SynthOptions& options);

// CSV with a header of activity, subject, timestamp, then the feature
// columns; loadable through the ordinary ingestion path.
std::string synth_csv(const DatasetSchema& schema, const SynthOptions& options);

}  // namespace pg
