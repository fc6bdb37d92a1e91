#ifndef CERTEVAL_EXTRACTION_HPP_
#define CERTEVAL_EXTRACTION_HPP_

#include <algorithm>
#include <cctype>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "certeval/answer.hpp"
#include "certeval/errors.hpp"
#include "certeval/types.hpp"

namespace certeval {

enum class ChoiceLabelStyle { letter, index };

enum class ComplexityHeuristic { sentences, line_breaks, words, characters };

inline ComplexityHeuristic complexity_heuristic_from_string(const std::string& s) {
  if (s == "sentences") return ComplexityHeuristic::sentences;
  if (s == "line_breaks") return ComplexityHeuristic::line_breaks;
  if (s == "words") return ComplexityHeuristic::words;
  if (s == "characters") return ComplexityHeuristic::characters;
  throw ConfigError("unknown complexity heuristic: " + s);
}

inline std::string to_string(ComplexityHeuristic h) {
  switch (h) {
    case ComplexityHeuristic::sentences: return "sentences";
    case ComplexityHeuristic::line_breaks: return "line_breaks";
    case ComplexityHeuristic::words: return "words";
    case ComplexityHeuristic::characters: return "characters";
  }
  return "?";
}

struct ExtractionRules {
  std::vector<std::string> answer_markers{"The answer is", "the answer is"};
  std::string judgment_marker = "Judgment:";
  ChoiceLabelStyle choice_label_style = ChoiceLabelStyle::letter;

  void validate() const {
    if (answer_markers.empty()) throw ConfigError("at least one answer marker required");
    if (judgment_marker.empty()) throw ConfigError("judgment marker must be non-empty");
  }

  static ExtractionRules from_file(const std::string& path);
};

inline void to_json(nlohmann::json& j, const ExtractionRules& r) {
  j = nlohmann::json{
      {"answer_markers", r.answer_markers},
      {"judgment_marker", r.judgment_marker},
      {"choice_label_style", r.choice_label_style == ChoiceLabelStyle::letter ? "letter" : "index"}};
}
inline void from_json(const nlohmann::json& j, ExtractionRules& r) {
  if (j.contains("answer_markers")) j.at("answer_markers").get_to(r.answer_markers);
  if (j.contains("judgment_marker")) j.at("judgment_marker").get_to(r.judgment_marker);
  if (j.contains("choice_label_style")) {
    const auto s = j.at("choice_label_style").get<std::string>();
    if (s == "letter")
      r.choice_label_style = ChoiceLabelStyle::letter;
    else if (s == "index")
      r.choice_label_style = ChoiceLabelStyle::index;
    else
      throw ConfigError("unknown choice_label_style: " + s);
  }
  r.validate();
}

inline ExtractionRules ExtractionRules::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  nlohmann::json j;
  in >> j;
  return j.get<ExtractionRules>();
}

namespace detail {

// Position just past the last occurrence of any marker, or npos.
inline std::size_t last_marker_end(std::string_view text, const std::vector<std::string>& markers) {
  std::size_t best = std::string_view::npos;
  for (const auto& m : markers) {
    if (m.empty()) continue;
    std::size_t pos = text.rfind(m);
    if (pos == std::string_view::npos) continue;
    std::size_t end = pos + m.size();
    if (best == std::string_view::npos || end > best) best = end;
  }
  return best;
}

// Scans a leading numeric literal, tolerating currency signs, thousands
// commas, and trailing units. Returns the cleaned literal or nullopt.
inline std::optional<std::string> scan_numeric(std::string_view tail) {
  std::size_t i = 0;
  auto skip = [&] {
    while (i < tail.size() &&
           (std::isspace(static_cast<unsigned char>(tail[i])) || tail[i] == ':' || tail[i] == '$' ||
            tail[i] == '=' || tail[i] == '*' || tail[i] == '"'))
      ++i;
  };
  skip();
  std::string out;
  if (i < tail.size() && (tail[i] == '-' || tail[i] == '+')) out.push_back(tail[i++]);
  bool digits = false;
  while (i < tail.size() && (std::isdigit(static_cast<unsigned char>(tail[i])) || tail[i] == ',')) {
    if (tail[i] != ',') {
      out.push_back(tail[i]);
      digits = true;
    }
    ++i;
  }
  if (!digits) return std::nullopt;
  if (i + 1 < tail.size() && tail[i] == '.' &&
      std::isdigit(static_cast<unsigned char>(tail[i + 1]))) {
    out.push_back(tail[i++]);
    while (i < tail.size() && std::isdigit(static_cast<unsigned char>(tail[i]))) out.push_back(tail[i++]);
  } else if (i + 1 < tail.size() && tail[i] == '/' &&
             std::isdigit(static_cast<unsigned char>(tail[i + 1]))) {
    out.push_back(tail[i++]);
    while (i < tail.size() && std::isdigit(static_cast<unsigned char>(tail[i]))) out.push_back(tail[i++]);
  }
  return out;
}

inline std::string first_sentence(std::string_view tail) {
  std::size_t end = tail.find_first_of(".\n!?");
  return std::string(tail.substr(0, end));
}

}  // namespace detail

// Canonicalizes the text after the LAST answer-marker occurrence.
// Math answers are stripped of currency/commas then parsed as exact
// rationals; anything numeric-shaped that fails to parse falls back to a
// normalized text answer. Throws ExtractionFailedError when no marker is
// present or the marker is followed by nothing usable; callers drop such
// responses as invalid.
inline CanonicalAnswer extract_final_answer(const std::string& raw_text, TaskKind task,
                                            const ExtractionRules& rules) {
  if (raw_text.empty()) throw ExtractionFailedError("empty response text");
  rules.validate();
  const std::size_t start = detail::last_marker_end(raw_text, rules.answer_markers);
  if (start == std::string_view::npos) throw ExtractionFailedError("no answer marker found");
  std::string_view tail = std::string_view(raw_text).substr(start);

  if (task == TaskKind::qa_choice) {
    std::size_t i = 0;
    while (i < tail.size() && !std::isalnum(static_cast<unsigned char>(tail[i]))) ++i;
    if (i == tail.size()) throw ExtractionFailedError("no choice label after marker");
    if (rules.choice_label_style == ChoiceLabelStyle::letter) {
      char c = tail[i];
      if (!std::isalpha(static_cast<unsigned char>(c)))
        throw ExtractionFailedError("expected a letter choice label");
      return CanonicalAnswer::choice(std::toupper(static_cast<unsigned char>(c)) - 'A');
    }
    std::size_t j = i;
    while (j < tail.size() && std::isdigit(static_cast<unsigned char>(tail[j]))) ++j;
    if (j == i) throw ExtractionFailedError("expected an index choice label");
    return CanonicalAnswer::choice(std::stoi(std::string(tail.substr(i, j - i))));
  }

  if (task == TaskKind::math || task == TaskKind::other) {
    if (auto literal = detail::scan_numeric(tail)) {
      if (auto r = parse_rational(*literal)) return CanonicalAnswer::numeric(*r);
    }
    std::string sentence = detail::first_sentence(tail);
    std::string normalized = normalize_text(sentence);
    if (normalized.empty()) throw ExtractionFailedError("marker followed by no content");
    return CanonicalAnswer::text(sentence);
  }

  throw ExtractionFailedError("final-answer extraction is undefined for code responses");
}

// Total: scans for "<marker> correct." / "<marker> incorrect.", takes the
// LAST occurrence, and defaults to correct when the pattern is absent.
inline Judgment extract_judgment(const std::string& raw_text, const ExtractionRules& rules) {
  std::optional<Judgment> found;
  std::size_t pos = 0;
  while ((pos = raw_text.find(rules.judgment_marker, pos)) != std::string::npos) {
    std::size_t i = pos + rules.judgment_marker.size();
    while (i < raw_text.size() && raw_text[i] == ' ') ++i;
    std::string_view rest = std::string_view(raw_text).substr(i);
    if (rest.starts_with("incorrect"))
      found = Judgment::incorrect;
    else if (rest.starts_with("correct"))
      found = Judgment::correct;
    pos += rules.judgment_marker.size();
  }
  return found.value_or(Judgment::correct);
}

// Deterministic length heuristic. Sentences are maximal segments ending in
// '.', '!' or '?' followed by whitespace or end of text.
inline int complexity_of(const std::string& raw_text, ComplexityHeuristic heuristic) {
  switch (heuristic) {
    case ComplexityHeuristic::characters:
      return static_cast<int>(raw_text.size());
    case ComplexityHeuristic::line_breaks:
      return static_cast<int>(std::count(raw_text.begin(), raw_text.end(), '\n'));
    case ComplexityHeuristic::words: {
      int n = 0;
      bool in_word = false;
      for (char c : raw_text) {
        const bool space = std::isspace(static_cast<unsigned char>(c)) != 0;
        if (!space && !in_word) ++n;
        in_word = !space;
      }
      return n;
    }
    case ComplexityHeuristic::sentences: {
      int n = 0;
      for (std::size_t i = 0; i < raw_text.size(); ++i) {
        if (raw_text[i] != '.' && raw_text[i] != '!' && raw_text[i] != '?') continue;
        // run of terminators counts once
        std::size_t j = i;
        while (j + 1 < raw_text.size() &&
               (raw_text[j + 1] == '.' || raw_text[j + 1] == '!' || raw_text[j + 1] == '?'))
          ++j;
        if (j + 1 == raw_text.size() ||
            std::isspace(static_cast<unsigned char>(raw_text[j + 1])))
          ++n;
        i = j;
      }
      return n;
    }
  }
  return 0;
}

}  // namespace certeval

#endif  // CERTEVAL_EXTRACTION_HPP_
