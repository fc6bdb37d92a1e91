#ifndef CERTEVAL_BACKENDS_HPP_
#define CERTEVAL_BACKENDS_HPP_

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "certeval/errors.hpp"
#include "certeval/hashutil.hpp"
#include "certeval/rng.hpp"
#include "certeval/types.hpp"

namespace certeval {

// A source of sampled response texts. `key` identifies the query so that
// replay and synthetic backends can look up their material; remote
// backends ignore it.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::string id() const = 0;
  virtual std::vector<std::string> generate(const std::string& key, const std::string& prompt,
                                            const SamplingParams& params) = 0;
};

// A source of critique texts for (query, response) pairs. Pipelines parse
// the returned text with extract_judgment; they never look at anything else.
class JudgmentSource {
 public:
  virtual ~JudgmentSource() = default;
  virtual std::string critique(const Query& query, const Response& response) = 0;
};

// ---------------------------------------------------------------------------
// Sample cache: append-only, length-prefixed JSONL with per-record checksum.
// Record line: "<json-byte-length> <fnv64-hex> <json>".
// ---------------------------------------------------------------------------

struct CacheKey {
  std::string query_id;
  std::string manifest_hash;

  std::string flat() const { return query_id + "\x1f" + manifest_hash; }
  bool operator<(const CacheKey& o) const { return flat() < o.flat(); }
};

class SampleCache {
 public:
  explicit SampleCache(std::string path) : path_(std::move(path)) { load(); }

  // Append-once: a second put under the same key is a no-op.
  void put(const CacheKey& key, const std::vector<std::string>& samples) {
    std::lock_guard lock(mutex_);
    if (index_.contains(key.flat())) return;
    nlohmann::json j{{"query_id", key.query_id},
                     {"manifest_hash", key.manifest_hash},
                     {"samples", samples}};
    const std::string payload = j.dump();
    std::ofstream out(path_, std::ios::app);
    if (!out) throw ConfigError("cannot append to cache " + path_);
    out << payload.size() << " " << to_hex(fnv1a64(payload)) << " " << payload << "\n";
    index_[key.flat()] = samples;
  }

  std::optional<std::vector<std::string>> get(const CacheKey& key) const {
    std::lock_guard lock(mutex_);
    auto it = index_.find(key.flat());
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t size() const {
    std::lock_guard lock(mutex_);
    return index_.size();
  }

 private:
  void load() {
    std::ifstream in(path_);
    if (!in) return;  // fresh cache
    std::string line;
    std::size_t offset = 0;
    while (std::getline(in, line)) {
      const std::size_t record_offset = offset;
      offset += line.size() + 1;
      if (line.empty()) continue;
      const auto fail = [record_offset](const std::string& what) {
        throw IntegrityError("cache record at offset " + std::to_string(record_offset) + ": " + what);
      };
      const auto sp1 = line.find(' ');
      const auto sp2 = line.find(' ', sp1 + 1);
      if (sp1 == std::string::npos || sp2 == std::string::npos) fail("malformed header");
      std::size_t len = 0;
      try {
        len = std::stoul(line.substr(0, sp1));
      } catch (...) {
        fail("bad length prefix");
      }
      const std::string crc = line.substr(sp1 + 1, sp2 - sp1 - 1);
      const std::string payload = line.substr(sp2 + 1);
      if (payload.size() != len) fail("length mismatch");
      if (to_hex(fnv1a64(payload)) != crc) fail("checksum mismatch");
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(payload);
      } catch (...) {
        fail("unparseable payload");
      }
      CacheKey key{j.at("query_id").get<std::string>(), j.at("manifest_hash").get<std::string>()};
      index_.emplace(key.flat(), j.at("samples").get<std::vector<std::string>>());
    }
  }

  std::string path_;
  mutable std::mutex mutex_;
  std::map<std::string, std::vector<std::string>> index_;
};

// ---------------------------------------------------------------------------
// Synthetic backend: a scripted stochastic model for desk-scale experiments.
// ---------------------------------------------------------------------------

struct SyntheticModelSpec {
  struct Outcome {
    std::string answer;       // final-answer literal rendered into the text
    double probability = 0;
  };
  std::map<std::string, std::vector<Outcome>> per_query;
  std::vector<Outcome> default_outcomes;
  double sensitivity = 1.0;  // P(judge incorrect | response incorrect)
  double specificity = 1.0;  // P(judge correct | response correct)
  std::uint64_t seed = 0;

  void validate() const {
    auto check = [](const std::vector<Outcome>& outcomes, const std::string& label) {
      if (outcomes.empty()) return;
      double sum = 0;
      for (const auto& o : outcomes) {
        if (o.probability < 0) throw ConfigError(label + ": negative probability");
        sum += o.probability;
      }
      if (std::abs(sum - 1.0) > 1e-9) throw ConfigError(label + ": probabilities must sum to 1");
    };
    check(default_outcomes, "default_outcomes");
    for (const auto& [qid, outcomes] : per_query) check(outcomes, "per_query " + qid);
    if (sensitivity < 0 || sensitivity > 1 || specificity < 0 || specificity > 1)
      throw ConfigError("sensitivity and specificity must be in [0,1]");
  }
};

inline void to_json(nlohmann::json& j, const SyntheticModelSpec::Outcome& o) {
  j = nlohmann::json{{"answer", o.answer}, {"probability", o.probability}};
}
inline void from_json(const nlohmann::json& j, SyntheticModelSpec::Outcome& o) {
  j.at("answer").get_to(o.answer);
  j.at("probability").get_to(o.probability);
}
inline void to_json(nlohmann::json& j, const SyntheticModelSpec& s) {
  j = nlohmann::json{{"per_query", s.per_query},
                     {"default_outcomes", s.default_outcomes},
                     {"sensitivity", s.sensitivity},
                     {"specificity", s.specificity},
                     {"seed", s.seed}};
}
inline void from_json(const nlohmann::json& j, SyntheticModelSpec& s) {
  if (j.contains("per_query")) j.at("per_query").get_to(s.per_query);
  if (j.contains("default_outcomes")) j.at("default_outcomes").get_to(s.default_outcomes);
  if (j.contains("sensitivity")) j.at("sensitivity").get_to(s.sensitivity);
  if (j.contains("specificity")) j.at("specificity").get_to(s.specificity);
  if (j.contains("seed")) j.at("seed").get_to(s.seed);
  s.validate();
}

class SyntheticBackend : public Backend {
 public:
  explicit SyntheticBackend(SyntheticModelSpec spec) : spec_(std::move(spec)) { spec_.validate(); }

  std::string id() const override { return "synthetic"; }

  std::vector<std::string> generate(const std::string& key, const std::string& /*prompt*/,
                                    const SamplingParams& params) override {
    params.validate();
    const auto it = spec_.per_query.find(key);
    const auto& outcomes = it != spec_.per_query.end() ? it->second : spec_.default_outcomes;
    if (outcomes.empty()) throw ConfigError("no synthetic answer distribution for " + key);
    std::vector<double> weights;
    weights.reserve(outcomes.size());
    for (const auto& o : outcomes) weights.push_back(o.probability);
    Rng rng = derive_rng(spec_.seed, "gen:" + key);
    std::vector<std::string> texts;
    texts.reserve(params.k);
    for (int i = 0; i < params.k; ++i) {
      const auto& outcome = outcomes[next_discrete(rng, weights)];
      texts.push_back("Reasoning step. The answer is " + outcome.answer + ".");
    }
    return texts;
  }

 private:
  SyntheticModelSpec spec_;
};

// Scripted critic: judges via the response's gold correctness flipped by
// the configured sensitivity/specificity. With both at 1 it is a perfect
// verifier. An optional per-query override lets tests shape the error rate
// as a function of query properties.
class SyntheticCritic : public JudgmentSource {
 public:
  using BehaviorFn = std::function<std::pair<double, double>(const Query&)>;

  SyntheticCritic(double sensitivity, double specificity, std::uint64_t seed,
                  BehaviorFn behavior = nullptr)
      : sensitivity_(sensitivity),
        specificity_(specificity),
        rng_(derive_rng(seed, "critic")),
        behavior_(std::move(behavior)) {
    if (sensitivity < 0 || sensitivity > 1 || specificity < 0 || specificity > 1)
      throw ConfigError("sensitivity and specificity must be in [0,1]");
  }

  std::string critique(const Query& query, const Response& response) override {
    if (!response.correct)
      throw UngradedBagError("synthetic critic requires graded responses");
    auto [sens, spec] = behavior_ ? behavior_(query) : std::pair{sensitivity_, specificity_};
    const bool actually_correct = *response.correct;
    bool says_correct;
    std::lock_guard lock(mutex_);
    if (actually_correct)
      says_correct = next_bernoulli(rng_, spec);
    else
      says_correct = !next_bernoulli(rng_, sens);
    return std::string("Checked the reasoning. Judgment: ") +
           (says_correct ? "correct." : "incorrect.");
  }

 private:
  double sensitivity_;
  double specificity_;
  Rng rng_;
  BehaviorFn behavior_;
  std::mutex mutex_;
};

// ---------------------------------------------------------------------------
// Replay backend: verbatim texts from the cache, never regenerates.
// ---------------------------------------------------------------------------

class ReplayBackend : public Backend {
 public:
  ReplayBackend(const SampleCache& cache, std::string manifest_hash)
      : cache_(cache), manifest_hash_(std::move(manifest_hash)) {}

  std::string id() const override { return "replay"; }

  std::vector<std::string> generate(const std::string& key, const std::string& /*prompt*/,
                                    const SamplingParams& params) override {
    params.validate();
    auto samples = cache_.get({key, manifest_hash_});
    if (!samples)
      throw ReplayMissError("no recorded samples for query " + key + " under manifest " +
                            manifest_hash_);
    return *samples;
  }

 private:
  const SampleCache& cache_;
  std::string manifest_hash_;
};

// Checks the cache first, otherwise generates and writes through before
// returning; metrics only ever see cached samples.
inline std::vector<std::string> generate_cached(Backend& backend, SampleCache& cache,
                                                const std::string& query_id,
                                                const RunManifest& manifest,
                                                const std::string& prompt) {
  const CacheKey key{query_id, manifest.content_hash()};
  if (auto hit = cache.get(key)) return *hit;
  auto samples = backend.generate(query_id, prompt, manifest.params);
  cache.put(key, samples);
  return samples;
}

}  // namespace certeval

#endif  // CERTEVAL_BACKENDS_HPP_
