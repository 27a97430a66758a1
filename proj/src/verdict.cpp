#include "poisonguard/verdict.hpp"

#include <algorithm>
#include <cctype>

#include "poisonguard/errors.hpp"
#include "poisonguard/text.hpp"

namespace pg {

std::string to_string(Detection d) {
  switch (d) {
    case Detection::Poisoned: return "poisoned";
    case Detection::NotPoisoned: return "not_poisoned";
    case Detection::Unparseable: return "unparseable";
  }
  return "unparseable";
}

Suggestion Suggestion::single(std::string label, bool in_set) {
  Suggestion s;
  s.kind = Kind::Single;
  s.labels = {std::move(label)};
  s.in_set = {in_set};
  return s;
}

Suggestion Suggestion::ambiguous(std::vector<std::string> labels, std::vector<bool> in_set) {
  Suggestion s;
  s.kind = Kind::Ambiguous;
  if (in_set.size() != labels.size()) in_set.assign(labels.size(), true);
  s.labels = std::move(labels);
  s.in_set = std::move(in_set);
  return s;
}

namespace {

std::pair<std::string, bool> canonicalize(const std::string& raw,
                                          const std::vector<std::string>& label_set) {
  std::string trimmed = text::trim(raw);
  // Wrapping quotes and sentence-final punctuation are not part of a label.
  while (!trimmed.empty() && (trimmed.back() == '.' || trimmed.back() == '!' ||
                              trimmed.back() == '"' || trimmed.back() == '\'' ||
                              trimmed.back() == '*'))
    trimmed.pop_back();
  while (!trimmed.empty() && (trimmed.front() == '"' || trimmed.front() == '\'' ||
                              trimmed.front() == '*'))
    trimmed.erase(trimmed.begin());
  trimmed = text::trim(trimmed);
  for (const auto& l : label_set) {
    if (text::iequals(l, trimmed)) return {l, true};
  }
  return {trimmed, false};
}

bool is_na(const std::string& s) {
  std::string n = text::lower(text::trim(s));
  return n.empty() || n == "n/a" || n == "na" || n == "none" || n == "unknown" || n == "-";
}

// Splits "Sitting/Standing", "Sitting or Standing", "Sitting, Standing".
std::vector<std::string> split_candidates(const std::string& value) {
  std::string normalized = value;
  // Lowercase-insensitive " or " -> "/" so a single split pass suffices.
  std::size_t pos = 0;
  while ((pos = text::ifind(normalized, " or ", pos)) != std::string::npos) {
    normalized.replace(pos, 4, "/");
  }
  std::replace(normalized.begin(), normalized.end(), ',', '/');
  std::vector<std::string> parts;
  for (const auto& p : text::split(normalized, '/')) {
    std::string t = text::trim(p);
    if (!t.empty()) parts.push_back(t);
  }
  return parts;
}

Suggestion suggestion_from_value(const std::string& value,
                                 const std::vector<std::string>& label_set) {
  if (is_na(value)) return Suggestion::none();
  std::vector<std::string> parts = split_candidates(value);
  std::vector<std::string> labels;
  std::vector<bool> in_set;
  for (const auto& p : parts) {
    auto [canon, known] = canonicalize(p, label_set);
    if (std::find(labels.begin(), labels.end(), canon) == labels.end()) {
      labels.push_back(canon);
      in_set.push_back(known);
    }
  }
  if (labels.empty()) return Suggestion::none();
  if (labels.size() == 1) return Suggestion::single(labels.front(), in_set.front());
  return Suggestion::ambiguous(std::move(labels), std::move(in_set));
}

// Value of "KEY: ..." up to end of line, searched case-insensitively. The
// LAST occurrence wins: responses sometimes restate the answer-format
// instructions before actually answering, and the answer block closes the
// response by contract.
std::optional<std::string> find_field(const std::string& raw, std::string_view key) {
  std::size_t pos = std::string::npos;
  std::size_t cursor = 0;
  while (true) {
    std::size_t hit = text::ifind(raw, key, cursor);
    if (hit == std::string::npos) break;
    pos = hit;
    cursor = hit + key.size();
  }
  if (pos == std::string::npos) return std::nullopt;
  pos += key.size();
  std::size_t eol = raw.find('\n', pos);
  if (eol == std::string::npos) eol = raw.size();
  return text::trim(raw.substr(pos, eol - pos));
}

bool negated_nearby(const std::string& lower_text, std::size_t keyword_pos) {
  // Look back a few words for a negation.
  static const char* negators[] = {"not ", "no ", "isn't", "is not", "wasn't",
                                   "doesn't", "does not", "never", "unlikely"};
  std::size_t begin = keyword_pos > 48 ? keyword_pos - 48 : 0;
  std::string_view before(lower_text.data() + begin, keyword_pos - begin);
  for (const char* n : negators) {
    if (before.find(n) != std::string_view::npos) return true;
  }
  return false;
}

std::optional<Detection> detect_free_text(const std::string& raw) {
  std::string lower_text = text::lower(raw);
  static const char* poison_keywords[] = {"poisoned", "poisoning", "tampered",
                                          "flipped",  "mislabeled", "mislabelled"};
  bool affirmed = false;
  bool negated = false;
  for (const char* kw : poison_keywords) {
    std::size_t pos = 0;
    while ((pos = lower_text.find(kw, pos)) != std::string::npos) {
      if (negated_nearby(lower_text, pos)) {
        negated = true;
      } else {
        affirmed = true;
      }
      pos += std::char_traits<char>::length(kw);
    }
  }
  // Label-endorsement phrases count as a clean call.
  static const char* clean_phrases[] = {"label appears correct", "label is correct",
                                        "label appears to be correct",
                                        "consistent with the reported label",
                                        "matches the reported label"};
  for (const char* p : clean_phrases) {
    if (lower_text.find(p) != std::string::npos) negated = true;
  }
  if (affirmed && !negated) return Detection::Poisoned;
  if (negated && !affirmed) return Detection::NotPoisoned;
  if (affirmed && negated) return Detection::Poisoned;  // explicit flag wins
  return std::nullopt;
}

// Word-boundary label mentions in the final paragraph, in text order.
// Adjacent mentions joined by "/" or "or" become one ambiguous group.
Suggestion scan_final_paragraph(const std::string& raw,
                                const std::vector<std::string>& label_set) {
  std::size_t para = raw.rfind("\n\n");
  std::string tail = para == std::string::npos ? raw : raw.substr(para + 2);

  struct Mention {
    std::size_t pos;
    std::size_t end;
    std::string label;
  };
  std::vector<Mention> mentions;
  for (const auto& label : label_set) {
    std::size_t pos = 0;
    while ((pos = text::ifind(tail, label, pos)) != std::string::npos) {
      bool left_ok = pos == 0 || !std::isalnum(static_cast<unsigned char>(tail[pos - 1]));
      std::size_t end = pos + label.size();
      bool right_ok = end >= tail.size() || !std::isalnum(static_cast<unsigned char>(tail[end]));
      if (left_ok && right_ok) mentions.push_back({pos, end, label});
      pos = end;
    }
  }
  if (mentions.empty()) return Suggestion::none();
  std::sort(mentions.begin(), mentions.end(),
            [](const Mention& a, const Mention& b) { return a.pos < b.pos; });

  // Group mentions connected by "/" or "or" between them.
  std::vector<std::vector<std::string>> groups;
  for (std::size_t i = 0; i < mentions.size(); ++i) {
    bool joined = false;
    if (i > 0) {
      std::string between =
          text::lower(tail.substr(mentions[i - 1].end, mentions[i].pos - mentions[i - 1].end));
      std::string squeezed;
      for (char c : between) {
        if (!std::isspace(static_cast<unsigned char>(c))) squeezed += c;
      }
      joined = squeezed == "/" || squeezed == "or" || squeezed == ",or";
    }
    if (joined) {
      if (std::find(groups.back().begin(), groups.back().end(), mentions[i].label) ==
          groups.back().end())
        groups.back().push_back(mentions[i].label);
    } else {
      groups.push_back({mentions[i].label});
    }
  }
  // Conclusions come last in step-by-step answers.
  const std::vector<std::string>& last = groups.back();
  if (last.size() == 1) return Suggestion::single(last.front());
  return Suggestion::ambiguous(last);
}

}  // namespace

Verdict parse_response(const std::string& raw, const std::vector<std::string>& label_set) {
  Verdict v;
  v.rationale = raw;

  // Structured answer block first.
  if (auto flag = find_field(raw, "POISONED:")) {
    std::string f = text::lower(*flag);
    bool yes = f.rfind("yes", 0) == 0 || f.rfind("true", 0) == 0;
    bool no = f.rfind("no", 0) == 0 || f.rfind("false", 0) == 0;
    if (yes || no) {
      if (no) {
        v.detection = Detection::NotPoisoned;
        v.suggestion = Suggestion::none();
        return v;
      }
      v.detection = Detection::Poisoned;
      if (auto label = find_field(raw, "CORRECT_LABEL:")) {
        v.suggestion = suggestion_from_value(*label, label_set);
      } else {
        v.suggestion = Suggestion::none();
      }
      return v;
    }
  }

  // Free-text fallback.
  if (auto d = detect_free_text(raw)) {
    v.detection = *d;
    if (v.detection == Detection::Poisoned) {
      v.suggestion = scan_final_paragraph(raw, label_set);
    } else {
      v.suggestion = Suggestion::none();
    }
    return v;
  }

  v.detection = Detection::Unparseable;
  v.suggestion = Suggestion::none();
  return v;
}

std::string to_string(Outcome o) {
  switch (o) {
    case Outcome::CorrectSanitize: return "correct_sanitize";
    case Outcome::WrongSanitize: return "wrong_sanitize";
    case Outcome::AmbiguousSanitize: return "ambiguous_sanitize";
    case Outcome::MissedDetection: return "missed_detection";
    case Outcome::FalseAlarmPreserved: return "false_alarm_preserved";
    case Outcome::FalseAlarmAltered: return "false_alarm_altered";
    case Outcome::TrueNegative: return "true_negative";
    case Outcome::Unparseable: return "unparseable";
  }
  return "unparseable";
}

Outcome outcome_from_string(const std::string& s) {
  for (Outcome o : {Outcome::CorrectSanitize, Outcome::WrongSanitize,
                    Outcome::AmbiguousSanitize, Outcome::MissedDetection,
                    Outcome::FalseAlarmPreserved, Outcome::FalseAlarmAltered,
                    Outcome::TrueNegative, Outcome::Unparseable}) {
    if (to_string(o) == s) return o;
  }
  throw DataError("unknown outcome: " + s);
}

Outcome classify(const Verdict& verdict, const std::optional<PoisonRecord>& truth,
                 const std::string& reported_label) {
  const bool poisoned_truth = truth.has_value();

  if (verdict.detection == Detection::Unparseable) {
    // Conservative for poisoned truth: the poison survives undetected.
    return poisoned_truth ? Outcome::MissedDetection : Outcome::Unparseable;
  }

  if (poisoned_truth) {
    if (verdict.detection == Detection::NotPoisoned) return Outcome::MissedDetection;
    switch (verdict.suggestion.kind) {
      case Suggestion::Kind::Ambiguous:
        // A two-way guess does not restore a usable label.
        return Outcome::AmbiguousSanitize;
      case Suggestion::Kind::Single:
        return verdict.suggestion.labels.front() == truth->true_label
                   ? Outcome::CorrectSanitize
                   : Outcome::WrongSanitize;
      case Suggestion::Kind::None:
        return Outcome::WrongSanitize;  // detected, but no usable correction
    }
    return Outcome::WrongSanitize;
  }

  // Clean truth. Only an applicable single correction that differs from the
  // reported label actually rewrites the sample; everything else (none,
  // ambiguous, out-of-set, or restating the reported label) leaves it
  // untouched, which for a false positive is the preserved case.
  if (verdict.detection == Detection::NotPoisoned) return Outcome::TrueNegative;
  if (verdict.suggestion.single_applicable() &&
      verdict.suggestion.labels.front() != reported_label) {
    return Outcome::FalseAlarmAltered;
  }
  return Outcome::FalseAlarmPreserved;
}

}  // namespace pg
