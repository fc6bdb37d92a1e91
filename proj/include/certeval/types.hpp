#ifndef CERTEVAL_TYPES_HPP_
#define CERTEVAL_TYPES_HPP_

#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "certeval/answer.hpp"
#include "certeval/errors.hpp"
#include "certeval/hashutil.hpp"

namespace certeval {

enum class TaskKind { math, code, qa_choice, other };

inline std::string to_string(TaskKind t) {
  switch (t) {
    case TaskKind::math: return "math";
    case TaskKind::code: return "code";
    case TaskKind::qa_choice: return "qa-choice";
    case TaskKind::other: return "other";
  }
  return "?";
}

inline TaskKind task_kind_from_string(const std::string& s) {
  if (s == "math") return TaskKind::math;
  if (s == "code") return TaskKind::code;
  if (s == "qa-choice") return TaskKind::qa_choice;
  if (s == "other") return TaskKind::other;
  throw ConfigError("unknown source_task: " + s);
}

enum class Judgment { correct, incorrect };

inline std::string to_string(Judgment j) {
  return j == Judgment::correct ? "correct" : "incorrect";
}

inline Judgment judgment_from_string(const std::string& s) {
  if (s == "correct") return Judgment::correct;
  if (s == "incorrect") return Judgment::incorrect;
  throw ConfigError("unknown judgment: " + s);
}

struct UnitTest {
  std::string id;
  std::string body;
  bool operator==(const UnitTest&) const = default;
};

inline void to_json(nlohmann::json& j, const UnitTest& t) {
  j = nlohmann::json{{"id", t.id}, {"body", t.body}};
}
inline void from_json(const nlohmann::json& j, UnitTest& t) {
  j.at("id").get_to(t.id);
  j.at("body").get_to(t.body);
}

struct Query {
  std::string id;
  TaskKind source_task = TaskKind::other;
  std::string text;
  std::optional<std::vector<std::string>> choices;   // qa-choice only
  std::optional<CanonicalAnswer> expected;           // gold answer when known
  std::optional<std::vector<UnitTest>> unit_tests;   // code only

  void validate() const {
    if (choices.has_value() != (source_task == TaskKind::qa_choice))
      throw ConfigError("query " + id + ": choices present iff source_task = qa-choice");
    if (unit_tests.has_value() != (source_task == TaskKind::code))
      throw ConfigError("query " + id + ": unit_tests present iff source_task = code");
  }
};

inline void to_json(nlohmann::json& j, const Query& q) {
  j = nlohmann::json{{"id", q.id}, {"source_task", to_string(q.source_task)}, {"text", q.text}};
  if (q.choices) j["choices"] = *q.choices;
  if (q.expected) j["expected"] = *q.expected;
  if (q.unit_tests) j["unit_tests"] = *q.unit_tests;
}
inline void from_json(const nlohmann::json& j, Query& q) {
  j.at("id").get_to(q.id);
  q.source_task = task_kind_from_string(j.at("source_task").get<std::string>());
  j.at("text").get_to(q.text);
  q.choices.reset();
  q.expected.reset();
  q.unit_tests.reset();
  if (j.contains("choices")) q.choices = j.at("choices").get<std::vector<std::string>>();
  if (j.contains("expected")) q.expected = j.at("expected").get<CanonicalAnswer>();
  if (j.contains("unit_tests")) q.unit_tests = j.at("unit_tests").get<std::vector<UnitTest>>();
  q.validate();
}

struct Response {
  std::string query_id;
  std::string generator_id;  // conventional "family-size" shape, e.g. "palm2-L"
  std::string raw_text;
  std::optional<CanonicalAnswer> answer;
  std::optional<bool> correct;       // set only after grading
  std::optional<int> complexity;     // heuristic units, >= 0
  int sample_index = 0;
};

inline void to_json(nlohmann::json& j, const Response& r) {
  j = nlohmann::json{{"query_id", r.query_id},
                     {"generator_id", r.generator_id},
                     {"raw_text", r.raw_text},
                     {"sample_index", r.sample_index}};
  if (r.answer) j["answer"] = *r.answer;
  if (r.correct) j["correct"] = *r.correct;
  if (r.complexity) j["complexity"] = *r.complexity;
}
inline void from_json(const nlohmann::json& j, Response& r) {
  j.at("query_id").get_to(r.query_id);
  j.at("generator_id").get_to(r.generator_id);
  j.at("raw_text").get_to(r.raw_text);
  j.at("sample_index").get_to(r.sample_index);
  r.answer.reset();
  r.correct.reset();
  r.complexity.reset();
  if (j.contains("answer")) r.answer = j.at("answer").get<CanonicalAnswer>();
  if (j.contains("correct")) r.correct = j.at("correct").get<bool>();
  if (j.contains("complexity")) {
    int c = j.at("complexity").get<int>();
    if (c < 0) throw ConfigError("complexity must be >= 0");
    r.complexity = c;
  }
}

// The multiset of k sampled responses to one query.
struct AnswerBag {
  std::string query_id;
  int k = 0;
  std::vector<Response> responses;

  void validate() const {
    if (k < 1) throw ConfigError("bag " + query_id + ": k must be >= 1");
    if (static_cast<int>(responses.size()) != k)
      throw ConfigError("bag " + query_id + ": k does not match response count");
    for (const auto& r : responses)
      if (r.query_id != query_id)
        throw ConfigError("bag " + query_id + ": mixed query_ids");
  }
};

inline void to_json(nlohmann::json& j, const AnswerBag& b) {
  j = nlohmann::json{{"query_id", b.query_id}, {"k", b.k}, {"responses", b.responses}};
}
inline void from_json(const nlohmann::json& j, AnswerBag& b) {
  j.at("query_id").get_to(b.query_id);
  j.at("k").get_to(b.k);
  j.at("responses").get_to(b.responses);
  b.validate();
}

struct BenchmarkTriplet {
  Query query;
  Response response;
  Judgment gold_judgment = Judgment::correct;

  void validate() const {
    if (!response.correct)
      throw ConfigError("triplet " + query.id + ": response not graded");
    const bool correct = *response.correct;
    if (correct != (gold_judgment == Judgment::correct))
      throw ConfigError("triplet " + query.id + ": gold_judgment disagrees with response.correct");
  }
};

inline void to_json(nlohmann::json& j, const BenchmarkTriplet& t) {
  j = nlohmann::json{{"query", t.query},
                     {"response", t.response},
                     {"gold_judgment", to_string(t.gold_judgment)}};
}
inline void from_json(const nlohmann::json& j, BenchmarkTriplet& t) {
  j.at("query").get_to(t.query);
  j.at("response").get_to(t.response);
  t.gold_judgment = judgment_from_string(j.at("gold_judgment").get<std::string>());
  t.validate();
}

struct SamplingParams {
  double temperature = 0.6;
  double nucleus_p = 0.95;
  int k = 64;
  int max_tokens = 1024;
  std::vector<std::string> stop;

  void validate() const {
    if (temperature < 0) throw ConfigError("temperature must be >= 0");
    if (nucleus_p <= 0 || nucleus_p > 1) throw ConfigError("nucleus_p must be in (0,1]");
    if (k < 1) throw ConfigError("k must be >= 1");
  }
};

inline void to_json(nlohmann::json& j, const SamplingParams& p) {
  j = nlohmann::json{{"temperature", p.temperature},
                     {"nucleus_p", p.nucleus_p},
                     {"k", p.k},
                     {"max_tokens", p.max_tokens},
                     {"stop", p.stop}};
}
inline void from_json(const nlohmann::json& j, SamplingParams& p) {
  if (j.contains("temperature")) j.at("temperature").get_to(p.temperature);
  if (j.contains("nucleus_p")) j.at("nucleus_p").get_to(p.nucleus_p);
  if (j.contains("k")) j.at("k").get_to(p.k);
  if (j.contains("max_tokens")) j.at("max_tokens").get_to(p.max_tokens);
  if (j.contains("stop")) j.at("stop").get_to(p.stop);
  p.validate();
}

// Everything needed to replay a run byte-for-byte. created_at is for humans
// and is excluded from the content hash.
struct RunManifest {
  std::uint64_t seed = 0;
  std::string backend_id;
  SamplingParams params;
  std::string prompt_template_hash;
  std::string created_at;

  std::string content_hash() const {
    nlohmann::json j{{"seed", seed},
                     {"backend_id", backend_id},
                     {"params", params},
                     {"prompt_template_hash", prompt_template_hash}};
    return to_hex(fnv1a64(j.dump()));
  }
};

inline void to_json(nlohmann::json& j, const RunManifest& m) {
  j = nlohmann::json{{"seed", m.seed},
                     {"backend_id", m.backend_id},
                     {"params", m.params},
                     {"prompt_template_hash", m.prompt_template_hash},
                     {"created_at", m.created_at}};
}
inline void from_json(const nlohmann::json& j, RunManifest& m) {
  j.at("seed").get_to(m.seed);
  j.at("backend_id").get_to(m.backend_id);
  j.at("params").get_to(m.params);
  j.at("prompt_template_hash").get_to(m.prompt_template_hash);
  if (j.contains("created_at")) j.at("created_at").get_to(m.created_at);
}

// One JSON record per line, UTF-8.
template <typename T>
std::vector<T> read_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  std::vector<T> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(nlohmann::json::parse(line).get<T>());
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

template <typename T>
void write_jsonl(const std::string& path, const std::vector<T>& records) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path);
  for (const auto& r : records) out << nlohmann::json(r).dump() << "\n";
}

}  // namespace certeval

#endif  // CERTEVAL_TYPES_HPP_
