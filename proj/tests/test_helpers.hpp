#ifndef CERTEVAL_TEST_HELPERS_HPP_
#define CERTEVAL_TEST_HELPERS_HPP_

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "certeval/certeval.hpp"

namespace certeval::testing {

inline CanonicalAnswer num(const std::string& literal) {
  auto r = parse_rational(literal);
  if (!r) throw std::runtime_error("bad test literal: " + literal);
  return CanonicalAnswer::numeric(*r);
}

inline Response make_response(const std::string& query_id, int label, int sample_index,
                              const std::string& generator = "synth-S") {
  Response r;
  r.query_id = query_id;
  r.generator_id = generator;
  r.raw_text = "The answer is " + std::to_string(label) + ".";
  r.answer = CanonicalAnswer::numeric(label);
  r.sample_index = sample_index;
  return r;
}

// A bag whose responses carry integer answer labels, in the given order.
inline AnswerBag make_bag(const std::string& query_id, const std::vector<int>& labels,
                          const std::string& generator = "synth-S") {
  AnswerBag bag;
  bag.query_id = query_id;
  bag.k = static_cast<int>(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i)
    bag.responses.push_back(make_response(query_id, labels[i], static_cast<int>(i), generator));
  return bag;
}

// Grades every response of an integer-label bag against a gold label.
inline AnswerBag make_graded_bag(const std::string& query_id, const std::vector<int>& labels,
                                 int gold, const std::string& generator = "synth-S") {
  AnswerBag bag = make_bag(query_id, labels, generator);
  for (std::size_t i = 0; i < labels.size(); ++i) bag.responses[i].correct = labels[i] == gold;
  return bag;
}

// Independent brute-force oracle over the label multiset. Enumerates counts
// directly; shares no code with the FrequencyTable path.
struct BagOracle {
  std::vector<int> labels;

  std::map<int, int> counts() const {
    std::map<int, int> c;
    for (int l : labels) ++c[l];
    return c;
  }

  int mode_label() const {
    int best = labels.at(0);
    int best_count = 0;
    std::map<int, int> seen;
    for (int l : labels) ++seen[l];
    // first occurrence wins ties
    for (int l : labels) {
      if (seen[l] > best_count) {
        best = l;
        best_count = seen[l];
      }
    }
    return best;
  }

  // (top frequency, runner-up frequency)
  std::pair<int, int> top_two() const {
    int top = 0, second = 0;
    for (const auto& [label, count] : counts()) {
      if (count > top) {
        second = top;
        top = count;
      } else if (count > second) {
        second = count;
      }
    }
    return {top, second};
  }

  Rational uncertainty_rate() const {
    auto [top, second] = top_two();
    return Rational(second, top);
  }

  // nullopt encodes +inf (no wrong answers)
  std::optional<Rational> correctness_rate(int expected) const {
    auto c = counts();
    int expected_count = c.count(expected) ? c[expected] : 0;
    int top_wrong = 0;
    for (const auto& [label, count] : c)
      if (label != expected) top_wrong = std::max(top_wrong, count);
    if (top_wrong == 0) return std::nullopt;
    return Rational(expected_count, top_wrong);
  }
};

}  // namespace certeval::testing

#endif  // CERTEVAL_TEST_HELPERS_HPP_
