#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "poisonguard/dataset.hpp"

namespace pg {

// Directed activity-similarity relation used by the targeted strategy.
// Ships with per-dataset defaults asserted from domain knowledge; overridable
// through a JSON file {activity: [similar activities]}.
struct SimilarityMap {
  std::map<std::string, std::vector<std::string>> similar;

  void validate(const DatasetSchema& schema) const;
  const std::vector<std::string>* targets_for(const std::string& activity) const;

  static SimilarityMap builtin(const std::string& dataset);
  static SimilarityMap from_json(const io::ordered_json& j);
  static SimilarityMap from_json_file(const std::string& path);
  io::ordered_json to_json() const;
};

enum class AttackStrategy { Targeted, Random };

std::string to_string(AttackStrategy s);
AttackStrategy attack_strategy_from_string(const std::string& s);

struct AttackSpec {
  AttackStrategy strategy = AttackStrategy::Random;
  double rate = 1.0;  // fraction of windows to poison, in [0, 1]
  std::uint64_t seed = 0;
  std::optional<SimilarityMap> similarity;  // required iff Targeted

  void validate() const;
};

struct PoisonRecord {
  std::string window_id;
  std::string true_label;
  std::string poisoned_label;  // always != true_label
  AttackStrategy strategy = AttackStrategy::Random;
};

// Flips the labels of floor(rate * n) windows, chosen and retargeted
// deterministically from the seed. Untouched windows come back unchanged;
// sensor values are never modified.
std::pair<std::vector<LabeledWindow>, std::vector<PoisonRecord>> poison(
    const std::vector<LabeledWindow>& windows, const AttackSpec& spec,
    const DatasetSchema& schema);

// All ordered (true, poisoned) pairs: the similar pairs when a map is given,
// otherwise every ordered pair of distinct activities. Drives exhaustive
// per-pair experiment grids.
std::vector<std::pair<std::string, std::string>> flip_matrix(
    const std::vector<std::string>& label_set, const SimilarityMap* similarity);

io::ordered_json record_to_json(const PoisonRecord& r);
PoisonRecord record_from_json(const io::ordered_json& j);
void write_records_jsonl(const std::string& path, const std::vector<PoisonRecord>& records);
std::vector<PoisonRecord> read_records_jsonl(const std::string& path);

}  // namespace pg
