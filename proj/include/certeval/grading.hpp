#ifndef CERTEVAL_GRADING_HPP_
#define CERTEVAL_GRADING_HPP_

#include <sys/wait.h>

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "certeval/answer.hpp"
#include "certeval/errors.hpp"
#include "certeval/types.hpp"

namespace certeval {

enum class GradeDetail {
  numeric_match,
  numeric_mismatch,
  choice_match,
  choice_mismatch,
  text_match,
  text_mismatch,
  tests_passed,
  tests_failed,
};

inline std::string to_string(GradeDetail d) {
  switch (d) {
    case GradeDetail::numeric_match: return "numeric-match";
    case GradeDetail::numeric_mismatch: return "numeric-mismatch";
    case GradeDetail::choice_match: return "choice-match";
    case GradeDetail::choice_mismatch: return "choice-mismatch";
    case GradeDetail::text_match: return "text-match";
    case GradeDetail::text_mismatch: return "text-mismatch";
    case GradeDetail::tests_passed: return "tests-passed";
    case GradeDetail::tests_failed: return "tests-failed";
  }
  return "?";
}

struct GradeOutcome {
  bool correct = false;
  GradeDetail detail = GradeDetail::numeric_mismatch;
  int n_failed = 0;   // code only
  int passed = 0;     // code only
  int total = 0;      // code only
  bool timed_out = false;
};

// Exact rational equality after canonicalization; no float path.
inline GradeOutcome grade_numeric(const CanonicalAnswer& response_answer,
                                  const CanonicalAnswer& expected) {
  if (response_answer.kind() != AnswerKind::numeric || expected.kind() != AnswerKind::numeric)
    throw IncomparableAnswersError("grade_numeric requires two numeric answers");
  const bool match = response_answer.numeric_value() == expected.numeric_value();
  return {match, match ? GradeDetail::numeric_match : GradeDetail::numeric_mismatch};
}

inline GradeOutcome grade_choice(const CanonicalAnswer& response_answer,
                                 const CanonicalAnswer& expected) {
  if (response_answer.kind() != AnswerKind::choice || expected.kind() != AnswerKind::choice)
    throw IncomparableAnswersError("grade_choice requires two choice answers");
  const bool match = response_answer.choice_index() == expected.choice_index();
  return {match, match ? GradeDetail::choice_match : GradeDetail::choice_mismatch};
}

// Tolerant dispatch for pipeline grading: a kind mismatch (e.g. a text
// fallback against a numeric gold) grades as incorrect instead of erroring.
inline GradeOutcome grade_against_expected(const CanonicalAnswer& response_answer,
                                           const CanonicalAnswer& expected) {
  if (expected.kind() == AnswerKind::pass_profile)
    throw IncomparableAnswersError("pass-profile golds are graded by unit tests");
  if (response_answer.kind() != expected.kind()) {
    switch (expected.kind()) {
      case AnswerKind::numeric: return {false, GradeDetail::numeric_mismatch};
      case AnswerKind::choice: return {false, GradeDetail::choice_mismatch};
      default: return {false, GradeDetail::text_mismatch};
    }
  }
  switch (expected.kind()) {
    case AnswerKind::numeric: return grade_numeric(response_answer, expected);
    case AnswerKind::choice: return grade_choice(response_answer, expected);
    default: {
      const bool match = response_answer.text_value() == expected.text_value();
      return {match, match ? GradeDetail::text_match : GradeDetail::text_mismatch};
    }
  }
}

struct TestResult {
  std::string test_id;
  bool passed = false;
};

// The runner exceeded its wall-clock budget; grade_code converts this into
// a failed grade with the timeout flag set.
struct RunnerTimeoutError : Error {
  using Error::Error;
};

class TestRunner {
 public:
  virtual ~TestRunner() = default;
  virtual std::vector<TestResult> run(const std::string& code,
                                      const std::vector<UnitTest>& tests) = 0;
};

// Drops everything from the first non-indented line onward, keeping the
// indented completion body. Blank lines inside the body are kept.
inline std::string truncate_code_completion(const std::string& code) {
  std::istringstream in(code);
  std::ostringstream out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] != ' ' && line[0] != '\t') break;
    out << line << "\n";
  }
  return out.str();
}

// Spawns an external command per bag of tests. The command template takes
// {code} and {tests} placeholders for the two input files and must print one
// line per test: "<test_id> PASS|FAIL". A per-run wall clock is enforced
// with timeout(1); exceeding it raises RunnerTimeoutError.
class CommandTestRunner : public TestRunner {
 public:
  CommandTestRunner(std::string command_template, double timeout_seconds = 10.0,
                    std::filesystem::path work_dir = std::filesystem::temp_directory_path())
      : template_(std::move(command_template)),
        timeout_seconds_(timeout_seconds),
        work_dir_(std::move(work_dir)) {
    if (template_.find("{code}") == std::string::npos ||
        template_.find("{tests}") == std::string::npos)
      throw ConfigError("runner command template needs {code} and {tests} placeholders");
  }

  std::vector<TestResult> run(const std::string& code,
                              const std::vector<UnitTest>& tests) override {
    static std::atomic<unsigned> counter{0};
    const unsigned n = counter++;
    const auto code_path = work_dir_ / ("certeval_code_" + std::to_string(n) + ".txt");
    const auto tests_path = work_dir_ / ("certeval_tests_" + std::to_string(n) + ".txt");
    write_file(code_path, code);
    {
      std::ofstream out(tests_path);
      for (const auto& t : tests) out << t.id << "\t" << t.body << "\n";
    }

    std::string cmd = template_;
    replace(cmd, "{code}", code_path.string());
    replace(cmd, "{tests}", tests_path.string());
    cmd = "timeout " + std::to_string(timeout_seconds_) + " " + cmd + " 2>/dev/null";

    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) throw InfrastructureError("cannot spawn test runner: " + cmd);
    std::string output;
    char buf[4096];
    std::size_t got;
    while ((got = fread(buf, 1, sizeof buf, pipe)) > 0) output.append(buf, got);
    const int status = pclose(pipe);
    std::filesystem::remove(code_path);
    std::filesystem::remove(tests_path);

    const int exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    if (exit_code == 124) throw RunnerTimeoutError("test runner exceeded wall clock");
    if (exit_code == 127 || exit_code == 126)
      throw InfrastructureError("test runner command not available: " + template_);

    std::vector<TestResult> results = parse_manifest(output);
    if (results.empty() && exit_code != 0)
      throw InfrastructureError("test runner produced no manifest (exit " +
                                std::to_string(exit_code) + ")");
    return results;
  }

 private:
  static void write_file(const std::filesystem::path& p, const std::string& content) {
    std::ofstream out(p);
    if (!out) throw InfrastructureError("cannot write " + p.string());
    out << content;
  }
  static void replace(std::string& s, const std::string& from, const std::string& to) {
    for (std::size_t pos = 0; (pos = s.find(from, pos)) != std::string::npos; pos += to.size())
      s.replace(pos, from.size(), to);
  }
  static std::vector<TestResult> parse_manifest(const std::string& output) {
    std::vector<TestResult> results;
    std::istringstream in(output);
    std::string line;
    while (std::getline(in, line)) {
      const auto sep = line.find_last_of(" \t");
      if (sep == std::string::npos) continue;
      const std::string verdict = line.substr(sep + 1);
      if (verdict != "PASS" && verdict != "FAIL") continue;
      std::string id = line.substr(0, sep);
      while (!id.empty() && (id.back() == ' ' || id.back() == '\t')) id.pop_back();
      results.push_back({id, verdict == "PASS"});
    }
    return results;
  }

  std::string template_;
  double timeout_seconds_;
  std::filesystem::path work_dir_;
};

// Runs the query's unit tests against the response's (truncated) code and
// records the pass profile. Timeouts grade as incorrect with every test
// counted failed.
inline GradeOutcome grade_code(const Response& response, const Query& query, TestRunner& runner) {
  if (query.source_task != TaskKind::code || !query.unit_tests || query.unit_tests->empty())
    throw ConfigError("grade_code needs a code query with unit tests");
  const int total = static_cast<int>(query.unit_tests->size());
  std::vector<TestResult> results;
  try {
    results = runner.run(truncate_code_completion(response.raw_text), *query.unit_tests);
  } catch (const RunnerTimeoutError&) {
    return {false, GradeDetail::tests_failed, total, 0, total, true};
  }
  int passed = 0;
  for (const auto& t : *query.unit_tests)
    for (const auto& r : results)
      if (r.test_id == t.id && r.passed) {
        ++passed;
        break;
      }
  const int failed = total - passed;
  GradeOutcome out;
  out.correct = failed == 0;
  out.detail = failed == 0 ? GradeDetail::tests_passed : GradeDetail::tests_failed;
  out.n_failed = failed;
  out.passed = passed;
  out.total = total;
  return out;
}

// Grades every response of a code bag, running distinct responses
// concurrently and joining outcomes in sample order.
inline std::vector<GradeOutcome> grade_code_bag(const AnswerBag& bag, const Query& query,
                                                TestRunner& runner, int parallelism = 4) {
  std::vector<GradeOutcome> outcomes(bag.responses.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < bag.responses.size();) {
      try {
        outcomes[i] = grade_code(bag.responses[i], query, runner);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> threads;
  const int n = std::max(1, std::min<int>(parallelism, static_cast<int>(bag.responses.size())));
  threads.reserve(n);
  for (int i = 0; i < n; ++i) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);
  return outcomes;
}

}  // namespace certeval

#endif  // CERTEVAL_GRADING_HPP_
