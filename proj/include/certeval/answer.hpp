#ifndef CERTEVAL_ANSWER_HPP_
#define CERTEVAL_ANSWER_HPP_

#include <cctype>
#include <cstdint>
#include <functional>
#include <string>
#include <variant>

#include <json.hpp>

#include "certeval/errors.hpp"
#include "certeval/rational.hpp"

namespace certeval {

enum class AnswerKind { numeric, choice, pass_profile, text };

inline std::string to_string(AnswerKind k) {
  switch (k) {
    case AnswerKind::numeric: return "numeric";
    case AnswerKind::choice: return "choice";
    case AnswerKind::pass_profile: return "pass-profile";
    case AnswerKind::text: return "text";
  }
  return "?";
}

// Lowercase, collapse runs of whitespace to single spaces, trim, and drop a
// trailing sentence period. Used for text-kind answers only.
inline std::string normalize_text(const std::string& raw) {
  std::string out;
  bool pending_space = false;
  for (char c : raw) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!out.empty()) pending_space = true;
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  if (!out.empty() && out.back() == '.') out.pop_back();
  return out;
}

struct PassProfile {
  int passed = 0;
  int total = 0;
  bool operator==(const PassProfile&) const = default;
};

// A comparable, hashable normalized final answer extracted from a raw
// response. Numeric answers are exact rationals; equality never goes through
// floating point.
class CanonicalAnswer {
 public:
  CanonicalAnswer() = default;  // numeric 0; real values come from the factories

  static CanonicalAnswer numeric(Rational value) { return CanonicalAnswer(std::move(value)); }
  static CanonicalAnswer choice(int index) {
    if (index < 0) throw ConfigError("choice_index must be >= 0");
    return CanonicalAnswer(index);
  }
  static CanonicalAnswer pass_profile(int passed, int total) {
    if (passed < 0 || total < 0 || passed > total)
      throw ConfigError("pass-profile requires 0 <= passed <= total");
    return CanonicalAnswer(PassProfile{passed, total});
  }
  static CanonicalAnswer text(const std::string& raw) {
    return CanonicalAnswer(normalize_text(raw), 0);
  }

  AnswerKind kind() const { return static_cast<AnswerKind>(value_.index()); }

  const Rational& numeric_value() const { return std::get<Rational>(value_); }
  int choice_index() const { return std::get<int>(value_); }
  const PassProfile& profile() const { return std::get<PassProfile>(value_); }
  const std::string& text_value() const { return std::get<std::string>(value_); }

  // Structural equality, total over all kinds. Container use only; grading
  // goes through answers_equal, which enforces comparability.
  bool operator==(const CanonicalAnswer&) const = default;

  std::string display() const {
    switch (kind()) {
      case AnswerKind::numeric: return to_fraction_string(numeric_value());
      case AnswerKind::choice: return "choice:" + std::to_string(choice_index());
      case AnswerKind::pass_profile:
        return "pass:" + std::to_string(profile().passed) + "/" + std::to_string(profile().total);
      case AnswerKind::text: return text_value();
    }
    return "?";
  }

 private:
  explicit CanonicalAnswer(Rational v) : value_(std::move(v)) {}
  explicit CanonicalAnswer(int idx) : value_(idx) {}
  explicit CanonicalAnswer(PassProfile p) : value_(p) {}
  CanonicalAnswer(std::string normalized, int) : value_(std::move(normalized)) {}

  std::variant<Rational, int, PassProfile, std::string> value_;
};

// Decidable equality within a kind; kind mismatch and pass-profile
// comparisons are errors rather than false.
inline bool answers_equal(const CanonicalAnswer& a, const CanonicalAnswer& b) {
  if (a.kind() != b.kind())
    throw IncomparableAnswersError("cannot compare " + to_string(a.kind()) + " with " +
                                   to_string(b.kind()));
  if (a.kind() == AnswerKind::pass_profile)
    throw IncomparableAnswersError("pass-profile answers are not equality-comparable");
  return a == b;
}

inline std::size_t hash_value(const CanonicalAnswer& a) {
  std::size_t seed = static_cast<std::size_t>(a.kind());
  auto mix = [&seed](std::size_t h) {
    seed ^= h + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2);
  };
  switch (a.kind()) {
    case AnswerKind::numeric: mix(std::hash<std::string>{}(to_fraction_string(a.numeric_value()))); break;
    case AnswerKind::choice: mix(std::hash<int>{}(a.choice_index())); break;
    case AnswerKind::pass_profile:
      mix(std::hash<int>{}(a.profile().passed));
      mix(std::hash<int>{}(a.profile().total));
      break;
    case AnswerKind::text: mix(std::hash<std::string>{}(a.text_value())); break;
  }
  return seed;
}

struct CanonicalAnswerHash {
  std::size_t operator()(const CanonicalAnswer& a) const { return hash_value(a); }
};

inline void to_json(nlohmann::json& j, const CanonicalAnswer& a) {
  j = nlohmann::json{{"kind", to_string(a.kind())}};
  switch (a.kind()) {
    case AnswerKind::numeric: j["value"] = to_fraction_string(a.numeric_value()); break;
    case AnswerKind::choice: j["choice_index"] = a.choice_index(); break;
    case AnswerKind::pass_profile:
      j["passed"] = a.profile().passed;
      j["total"] = a.profile().total;
      break;
    case AnswerKind::text: j["text"] = a.text_value(); break;
  }
}

inline void from_json(const nlohmann::json& j, CanonicalAnswer& a) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "numeric") {
    auto r = parse_rational(j.at("value").get<std::string>());
    if (!r) throw ConfigError("bad numeric answer literal: " + j.at("value").get<std::string>());
    a = CanonicalAnswer::numeric(*r);
  } else if (kind == "choice") {
    a = CanonicalAnswer::choice(j.at("choice_index").get<int>());
  } else if (kind == "pass-profile") {
    a = CanonicalAnswer::pass_profile(j.at("passed").get<int>(), j.at("total").get<int>());
  } else if (kind == "text") {
    a = CanonicalAnswer::text(j.at("text").get<std::string>());
  } else {
    throw ConfigError("unknown answer kind: " + kind);
  }
}

}  // namespace certeval

#endif  // CERTEVAL_ANSWER_HPP_
