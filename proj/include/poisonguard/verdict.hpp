#pragma once

#include <optional>
#include <string>
#include <vector>

#include "poisonguard/attack.hpp"
#include "poisonguard/jsonl.hpp"

namespace pg {

enum class Detection { Poisoned, NotPoisoned, Unparseable };

std::string to_string(Detection d);

struct Suggestion {
  enum class Kind { None, Single, Ambiguous };
  Kind kind = Kind::None;
  // Canonical spellings where the text matches the label set; raw trimmed
  // text otherwise (an out-of-set correction scores as a wrong sanitization
  // downstream, it is not silently dropped).
  std::vector<std::string> labels;
  std::vector<bool> in_set;  // parallel to labels

  // True when the suggestion is a single label the dataset actually knows,
  // i.e. a correction the pipeline can apply.
  bool single_applicable() const {
    return kind == Kind::Single && !in_set.empty() && in_set.front();
  }

  static Suggestion none() { return {}; }
  static Suggestion single(std::string label, bool in_set = true);
  static Suggestion ambiguous(std::vector<std::string> labels, std::vector<bool> in_set = {});
};

struct Verdict {
  Detection detection = Detection::Unparseable;
  Suggestion suggestion;
  std::string rationale;  // raw response text
};

// Parsed judgment for one window. Looks for the structured answer block
// (POISONED: yes|no, CORRECT_LABEL: ...) first and falls back to keyword and
// label-mention heuristics over free text. Never throws; the worst case is
// detection == Unparseable.
Verdict parse_response(const std::string& raw, const std::vector<std::string>& label_set);

enum class Outcome {
  CorrectSanitize,      // poisoned, detected, corrected to the true label
  WrongSanitize,        // poisoned, detected, correction wrong / unusable
  AmbiguousSanitize,    // poisoned, detected, several candidate labels offered
  MissedDetection,      // poisoned, not flagged (or response unparseable)
  FalseAlarmPreserved,  // clean, flagged, but left unaltered
  FalseAlarmAltered,    // clean, flagged, rewritten to a different label
  TrueNegative,         // clean, not flagged
  Unparseable           // clean, response unparseable (window kept as-is)
};

std::string to_string(Outcome o);
Outcome outcome_from_string(const std::string& s);

// Scores one verdict against ground truth. truth is the poison record when
// the window was attacked, nullopt when it is clean.
Outcome classify(const Verdict& verdict, const std::optional<PoisonRecord>& truth,
                 const std::string& reported_label);

}  // namespace pg
