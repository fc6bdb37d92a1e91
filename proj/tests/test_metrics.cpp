#include <doctest.h>

#include <cmath>

#include "test_helpers.hpp"

using namespace certeval;
using namespace certeval::testing;

namespace {

std::vector<int> repeated(std::initializer_list<std::pair<int, int>> spec) {
  std::vector<int> labels;
  for (auto [label, count] : spec)
    for (int i = 0; i < count; ++i) labels.push_back(label);
  return labels;
}

}  // namespace

TEST_CASE("frequency table counts the multiset exactly") {
  auto table = frequency_table(make_bag("q", {1, 1, 2}));
  CHECK(table.total == 3);
  CHECK(table.count_of(CanonicalAnswer::numeric(1)) == 2);
  CHECK(table.count_of(CanonicalAnswer::numeric(2)) == 1);

  auto table64 = frequency_table(make_bag("q", repeated({{1, 51}, {2, 13}})));
  CHECK(table64.count_of(CanonicalAnswer::numeric(1)) == 51);
  CHECK(table64.count_of(CanonicalAnswer::numeric(2)) == 13);
}

TEST_CASE("failed extractions are excluded from counts but kept in k") {
  AnswerBag bag = make_bag("q", {1, 1, 2});
  bag.responses[2].answer.reset();
  auto table = frequency_table(bag);
  CHECK(table.total == 3);
  CHECK(table.parsed_count() == 2);

  for (auto& r : bag.responses) r.answer.reset();
  CHECK_THROWS_AS(frequency_table(bag), EmptyBagError);
}

TEST_CASE("mode breaks ties by first occurrence") {
  CHECK(mode_answer(frequency_table(make_bag("q", {1, 1, 1, 2}))) == CanonicalAnswer::numeric(1));
  CHECK(mode_answer(frequency_table(make_bag("q", {2, 1, 2, 1}))) == CanonicalAnswer::numeric(2));
  CHECK(mode_answer(frequency_table(make_bag("q", {5}))) == CanonicalAnswer::numeric(5));
}

TEST_CASE("uncertainty rate: the illustration cases") {
  // 51 of one answer, 49 of another
  CHECK(uncertainty_rate_exact(make_bag("q", repeated({{1, 51}, {2, 49}}))) == Rational(49, 51));
  // unanimous
  CHECK(uncertainty_rate_exact(make_bag("q", std::vector<int>(64, 7))) == 0);
  // tied top two
  CHECK(uncertainty_rate_exact(make_bag("q", repeated({{1, 10}, {2, 10}}))) == 1);
}

TEST_CASE("certainty score is the negative natural log") {
  CHECK(certainty_score(make_bag("q", repeated({{1, 10}, {2, 10}}))) == 0.0);
  CHECK(std::isinf(certainty_score(make_bag("q", std::vector<int>(5, 1)))));
  CHECK(certainty_score(make_bag("q", {1, 1, 2})) ==
        doctest::Approx(-std::log(0.5)).epsilon(1e-12));
}

TEST_CASE("correctness rate") {
  auto bag = make_bag("q", repeated({{1, 30}, {2, 20}, {3, 14}}));
  auto cr = correctness_rate_exact(bag, CanonicalAnswer::numeric(1));
  CHECK_FALSE(cr.is_inf);
  CHECK(cr.value == Rational(3, 2));

  CHECK(correctness_rate_exact(make_bag("q", std::vector<int>(10, 1)), CanonicalAnswer::numeric(1))
            .is_inf);
  auto absent = correctness_rate_exact(make_bag("q", repeated({{2, 5}, {3, 3}})),
                                       CanonicalAnswer::numeric(1));
  CHECK(absent.value == 0);
  CHECK_THROWS_AS(correctness_rate_exact(make_bag("q", {1, 2}), CanonicalAnswer::choice(0)),
                  IncomparableAnswersError);
}

TEST_CASE("code surrogate correctness rate") {
  auto graded = [](int n_correct, int n_incorrect) {
    std::vector<int> labels(n_correct + n_incorrect, 0);
    AnswerBag bag = make_bag("q", labels);
    for (int i = 0; i < n_correct + n_incorrect; ++i) bag.responses[i].correct = i < n_correct;
    return bag;
  };
  CHECK(surrogate_cr_code(graded(60, 40)).value == Rational(3, 2));
  CHECK(surrogate_cr_code(graded(0, 100)).value == 0);
  CHECK(surrogate_cr_code(graded(100, 0)).is_inf);

  AnswerBag ungraded = make_bag("q", {1, 2});
  CHECK_THROWS_AS(surrogate_cr_code(ungraded), UngradedBagError);
}

TEST_CASE("majority vote") {
  CHECK(majority_vote(make_bag("q", repeated({{1, 40}, {2, 24}}))) == CanonicalAnswer::numeric(1));
  CHECK(majority_vote(make_bag("q", {9})) == CanonicalAnswer::numeric(9));
  CHECK(majority_vote(make_bag("q", {3, 4, 3, 4})) == CanonicalAnswer::numeric(3));
}

TEST_CASE("error reduction rate arithmetic") {
  CHECK(error_reduction_rate(83.5, 84.0) == doctest::Approx(3.0303).epsilon(1e-3));
  CHECK(error_reduction_rate(91.3, 92.7) == doctest::Approx(16.0920).epsilon(1e-3));
  CHECK(error_reduction_rate(95.8, 96.2) == doctest::Approx(9.5238).epsilon(1e-3));
  CHECK(error_reduction_rate(50.0, 50.0) == 0.0);
  CHECK_THROWS_AS(error_reduction_rate(100.0, 100.0), ConfigError);
}

TEST_CASE("metrics match the brute-force oracle on random bags") {
  Rng rng(20240819);
  for (int trial = 0; trial < 1000; ++trial) {
    const int k = 1 + static_cast<int>(next_index(rng, 64));
    const int alphabet = 1 + static_cast<int>(next_index(rng, 8));
    std::vector<int> labels;
    labels.reserve(k);
    for (int i = 0; i < k; ++i) labels.push_back(static_cast<int>(next_index(rng, alphabet)));
    BagOracle oracle{labels};
    AnswerBag bag = make_bag("q", labels);

    REQUIRE(uncertainty_rate_exact(bag) == oracle.uncertainty_rate());
    REQUIRE(majority_vote(bag) == CanonicalAnswer::numeric(oracle.mode_label()));

    const int expected = static_cast<int>(next_index(rng, alphabet));
    auto cr = correctness_rate_exact(bag, CanonicalAnswer::numeric(expected));
    auto oracle_cr = oracle.correctness_rate(expected);
    if (oracle_cr)
      REQUIRE(cr == ExtRational::finite(*oracle_cr));
    else
      REQUIRE(cr.is_inf);
  }
}

TEST_CASE("certainty score strictly decreases in UR") {
  double prev = certainty_score_from_ur(Rational(1, 100));
  for (int n = 2; n <= 100; ++n) {
    double cur = certainty_score_from_ur(Rational(n, 100));
    CHECK(cur < prev);
    prev = cur;
  }
}

TEST_CASE("removing a runner-up occurrence never decreases certainty") {
  Rng rng(31);
  for (int trial = 0; trial < 300; ++trial) {
    const int k = 2 + static_cast<int>(next_index(rng, 40));
    std::vector<int> labels;
    for (int i = 0; i < k; ++i) labels.push_back(static_cast<int>(next_index(rng, 4)));
    AnswerBag bag = make_bag("q", labels);
    auto rep = make_certainty_report(bag);
    if (!rep.runner_up) continue;

    std::vector<int> trimmed;
    bool removed = false;
    for (int l : labels) {
      if (!removed && CanonicalAnswer::numeric(l) == *rep.runner_up) {
        removed = true;
        continue;
      }
      trimmed.push_back(l);
    }
    REQUIRE(removed);
    CHECK(certainty_score(make_bag("q", trimmed)) >= certainty_score(bag));
  }
}

TEST_CASE("CR > 1 iff majority vote is correct, at unique maxima") {
  Rng rng(77);
  for (int trial = 0; trial < 500; ++trial) {
    const int k = 1 + static_cast<int>(next_index(rng, 32));
    std::vector<int> labels;
    for (int i = 0; i < k; ++i) labels.push_back(static_cast<int>(next_index(rng, 5)));
    BagOracle oracle{labels};
    auto [top, second] = oracle.top_two();
    if (top == second) continue;  // unique maximum only
    AnswerBag bag = make_bag("q", labels);
    const int expected = static_cast<int>(next_index(rng, 5));
    auto cr = correctness_rate_exact(bag, CanonicalAnswer::numeric(expected));
    const bool vote_correct = majority_vote(bag) == CanonicalAnswer::numeric(expected);
    const bool cr_above_one = cr.is_inf || cr.value > 1;
    CHECK(vote_correct == cr_above_one);
  }
}

TEST_CASE("majority vote is permutation-invariant at unique maxima") {
  Rng rng(123);
  for (int trial = 0; trial < 200; ++trial) {
    const int k = 1 + static_cast<int>(next_index(rng, 20));
    std::vector<int> labels;
    for (int i = 0; i < k; ++i) labels.push_back(static_cast<int>(next_index(rng, 4)));
    BagOracle oracle{labels};
    auto [top, second] = oracle.top_two();
    if (top == second) continue;
    const auto vote = majority_vote(make_bag("q", labels));
    std::vector<int> shuffled = labels;
    deterministic_shuffle(shuffled, rng);
    CHECK(majority_vote(make_bag("q", shuffled)) == vote);
  }
}

TEST_CASE("certainty report serializes exact and decimal forms") {
  auto rep = make_certainty_report(make_bag("q", {1, 1, 1, 2}), CanonicalAnswer::numeric(1));
  nlohmann::json j = rep;
  CHECK(j["log_base"] == "e");
  CHECK(j["uncertainty_rate_exact"] == "1/3");
  CHECK(j["correctness_rate_exact"] == "3");
  CHECK(j["top_freq"] == 3);
  CHECK(j["runner_up_freq"] == 1);

  auto unanimous = make_certainty_report(make_bag("q", {4, 4}));
  nlohmann::json ju = unanimous;
  CHECK(ju["certainty_score"] == "inf");
  CHECK(!ju.contains("runner_up"));
}
