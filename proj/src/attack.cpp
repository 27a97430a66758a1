#include "poisonguard/attack.hpp"

#include <algorithm>
#include <cmath>

#include "poisonguard/errors.hpp"
#include "poisonguard/rng.hpp"
#include "poisonguard/text.hpp"

namespace pg {

void SimilarityMap::validate(const DatasetSchema& schema) const {
  for (const auto& [from, targets] : similar) {
    if (!schema.match_label(from)) throw UnknownLabel(from);
    for (const auto& to : targets) {
      if (!schema.match_label(to)) throw UnknownLabel(to);
      if (DatasetSchema::normalize_label(from) == DatasetSchema::normalize_label(to))
        throw ConfigError("similarity map maps " + from + " to itself");
    }
  }
}

const std::vector<std::string>* SimilarityMap::targets_for(const std::string& activity) const {
  auto it = similar.find(activity);
  if (it == similar.end() || it->second.empty()) return nullptr;
  return &it->second;
}

SimilarityMap SimilarityMap::builtin(const std::string& dataset) {
  std::string n = text::lower(dataset);
  SimilarityMap m;
  if (n == "motionsense") {
    m.similar = {
        {"Standing", {"Sitting"}},
        {"Sitting", {"Standing"}},
        {"Upstairs", {"Downstairs", "Jogging", "Walking"}},
        {"Downstairs", {"Upstairs", "Jogging", "Walking"}},
        {"Jogging", {"Upstairs", "Downstairs", "Walking"}},
        {"Walking", {"Jogging", "Upstairs", "Downstairs"}},
    };
  } else if (n == "hhar") {
    m.similar = {
        {"Standing", {"Sitting"}},
        {"Sitting", {"Standing"}},
        {"Stairsup", {"Stairsdown", "Biking", "Walking"}},
        {"Stairsdown", {"Stairsup", "Biking", "Walking"}},
        {"Biking", {"Stairsup", "Stairsdown", "Walking"}},
        {"Walking", {"Biking", "Stairsup", "Stairsdown"}},
    };
  } else if (n == "wisdm") {
    m.similar = {
        {"Standing", {"Sitting"}},
        {"Sitting", {"Standing"}},
        {"Walking", {"Jogging", "Downstairs", "Upstairs"}},
        {"Jogging", {"Walking", "Downstairs", "Upstairs"}},
        {"Downstairs", {"Upstairs", "Jogging", "Walking"}},
        {"Upstairs", {"Downstairs", "Jogging", "Walking"}},
    };
  } else {
    throw ConfigError("no built-in similarity map for dataset: " + dataset);
  }
  return m;
}

SimilarityMap SimilarityMap::from_json(const io::ordered_json& j) {
  SimilarityMap m;
  for (auto it = j.begin(); it != j.end(); ++it) {
    m.similar[it.key()] = it.value().get<std::vector<std::string>>();
  }
  return m;
}

SimilarityMap SimilarityMap::from_json_file(const std::string& path) {
  return from_json(io::ordered_json::parse(io::read_file(path)));
}

io::ordered_json SimilarityMap::to_json() const {
  io::ordered_json j = io::ordered_json::object();
  for (const auto& [from, targets] : similar) j[from] = targets;
  return j;
}

std::string to_string(AttackStrategy s) {
  return s == AttackStrategy::Targeted ? "targeted" : "random";
}

AttackStrategy attack_strategy_from_string(const std::string& s) {
  std::string n = text::lower(text::trim(s));
  if (n == "targeted") return AttackStrategy::Targeted;
  if (n == "random") return AttackStrategy::Random;
  throw ConfigError("unknown attack strategy: " + s);
}

void AttackSpec::validate() const {
  if (rate < 0.0 || rate > 1.0) throw ConfigError("attack rate must be in [0, 1]");
  if (strategy == AttackStrategy::Targeted && !similarity.has_value())
    throw ConfigError("targeted attack requires a similarity map");
}

std::pair<std::vector<LabeledWindow>, std::vector<PoisonRecord>> poison(
    const std::vector<LabeledWindow>& windows, const AttackSpec& spec,
    const DatasetSchema& schema) {
  spec.validate();
  if (spec.strategy == AttackStrategy::Targeted) spec.similarity->validate(schema);

  const std::size_t n = windows.size();
  const std::size_t count = static_cast<std::size_t>(std::floor(spec.rate * static_cast<double>(n)));

  rng::Stream select_stream = rng::derive(spec.seed, "attack:select");
  std::vector<std::size_t> chosen = rng::sample_indices(select_stream, n, count);

  std::vector<LabeledWindow> out = windows;
  std::vector<PoisonRecord> records;
  records.reserve(count);

  rng::Stream target_stream = rng::derive(spec.seed, "attack:target");
  for (std::size_t idx : chosen) {
    const std::string& truth = windows[idx].label;
    std::string flipped;
    if (spec.strategy == AttackStrategy::Targeted) {
      const std::vector<std::string>* targets = spec.similarity->targets_for(truth);
      if (!targets) throw NoSimilarTarget(truth);
      flipped = (*targets)[static_cast<std::size_t>(target_stream.bounded(targets->size()))];
    } else {
      std::vector<std::string> candidates;
      for (const auto& l : schema.label_set) {
        if (l != truth) candidates.push_back(l);
      }
      if (candidates.empty()) throw DataError("label set leaves no flip target for " + truth);
      flipped = candidates[static_cast<std::size_t>(target_stream.bounded(candidates.size()))];
    }
    out[idx].label = flipped;
    records.push_back({windows[idx].window_id, truth, flipped, spec.strategy});
  }
  return {std::move(out), std::move(records)};
}

std::vector<std::pair<std::string, std::string>> flip_matrix(
    const std::vector<std::string>& label_set, const SimilarityMap* similarity) {
  std::vector<std::pair<std::string, std::string>> pairs;
  for (const auto& from : label_set) {
    if (similarity) {
      const std::vector<std::string>* targets = similarity->targets_for(from);
      if (!targets) continue;
      for (const auto& to : *targets) pairs.emplace_back(from, to);
    } else {
      for (const auto& to : label_set) {
        if (to != from) pairs.emplace_back(from, to);
      }
    }
  }
  return pairs;
}

io::ordered_json record_to_json(const PoisonRecord& r) {
  return {{"window_id", r.window_id},
          {"true_label", r.true_label},
          {"poisoned_label", r.poisoned_label},
          {"strategy", to_string(r.strategy)}};
}

PoisonRecord record_from_json(const io::ordered_json& j) {
  PoisonRecord r;
  r.window_id = j.at("window_id").get<std::string>();
  r.true_label = j.at("true_label").get<std::string>();
  r.poisoned_label = j.at("poisoned_label").get<std::string>();
  r.strategy = attack_strategy_from_string(j.at("strategy").get<std::string>());
  if (r.poisoned_label == r.true_label)
    throw DataError("poison record for " + r.window_id + " flips a label to itself");
  return r;
}

void write_records_jsonl(const std::string& path, const std::vector<PoisonRecord>& records) {
  std::vector<io::ordered_json> rows;
  rows.reserve(records.size());
  for (const auto& r : records) rows.push_back(record_to_json(r));
  io::write_jsonl(path, rows);
}

std::vector<PoisonRecord> read_records_jsonl(const std::string& path) {
  std::vector<PoisonRecord> records;
  for (const auto& j : io::read_jsonl(path)) records.push_back(record_from_json(j));
  return records;
}

}  // namespace pg
