#ifndef CERTEVAL_SELECTION_HPP_
#define CERTEVAL_SELECTION_HPP_

#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "certeval/extraction.hpp"
#include "certeval/metrics.hpp"
#include "certeval/rng.hpp"
#include "certeval/types.hpp"

namespace certeval {

struct MissingComplexityError : Error {
  using Error::Error;
};

// Inclusive CR band; +inf survives only a band whose high end is +inf.
struct CrBand {
  ExtRational low = ExtRational::finite(0);
  ExtRational high = ExtRational::infinity();

  bool contains(const ExtRational& cr) const { return low <= cr && cr <= high; }

  void validate() const {
    if (!(low <= high)) throw ConfigError("cr_band: low must be <= high");
  }
};

inline void to_json(nlohmann::json& j, const CrBand& b) {
  j = nlohmann::json{{"low", b.low.as_string()}, {"high", b.high.as_string()}};
}
inline void from_json(const nlohmann::json& j, CrBand& b) {
  b.low = ExtRational::parse(j.at("low").get<std::string>());
  b.high = ExtRational::parse(j.at("high").get<std::string>());
  b.validate();
}

struct SelectionConfig {
  CrBand cr_band;
  ComplexityHeuristic complexity_heuristic = ComplexityHeuristic::sentences;
  double softmax_temperature = 2.0;
  std::set<std::string> allowed_generators;  // empty = allow all
  std::uint64_t seed = 0;

  void validate() const {
    cr_band.validate();
    if (softmax_temperature <= 0) throw ConfigError("softmax temperature must be > 0");
  }
};

inline void to_json(nlohmann::json& j, const SelectionConfig& c) {
  j = nlohmann::json{{"cr_band", c.cr_band},
                     {"complexity_heuristic", to_string(c.complexity_heuristic)},
                     {"softmax_temperature", c.softmax_temperature},
                     {"allowed_generators", c.allowed_generators},
                     {"seed", c.seed}};
}
inline void from_json(const nlohmann::json& j, SelectionConfig& c) {
  if (j.contains("cr_band")) j.at("cr_band").get_to(c.cr_band);
  if (j.contains("complexity_heuristic"))
    c.complexity_heuristic =
        complexity_heuristic_from_string(j.at("complexity_heuristic").get<std::string>());
  if (j.contains("softmax_temperature")) j.at("softmax_temperature").get_to(c.softmax_temperature);
  if (j.contains("allowed_generators")) {
    c.allowed_generators.clear();
    for (const auto& g : j.at("allowed_generators")) c.allowed_generators.insert(g.get<std::string>());
  }
  if (j.contains("seed")) j.at("seed").get_to(c.seed);
  c.validate();
}

// The responses carrying the modal wrong answer (first-seen tie break), or
// for code bags the responses that pass the most unit tests while failing
// at least one. nullopt means the bag has no incorrect responses and the
// query is omitted from the benchmark.
inline std::optional<std::vector<Response>> pick_convincing_wrong(const AnswerBag& bag) {
  for (const auto& r : bag.responses)
    if (!r.correct) throw UngradedBagError("bag " + bag.query_id + " is not fully graded");

  std::vector<const Response*> incorrect;
  for (const auto& r : bag.responses)
    if (!*r.correct) incorrect.push_back(&r);
  if (incorrect.empty()) return std::nullopt;

  const bool code_bag = incorrect.front()->answer &&
                        incorrect.front()->answer->kind() == AnswerKind::pass_profile;
  std::vector<Response> picked;
  if (code_bag) {
    int best = -1;
    for (const Response* r : incorrect)
      if (r->answer && r->answer->profile().passed > best) best = r->answer->profile().passed;
    for (const Response* r : incorrect)
      if (r->answer && r->answer->profile().passed == best) picked.push_back(*r);
    return picked;
  }

  // Modal wrong answer over parsed incorrect responses.
  FrequencyTable wrong_table;
  std::unordered_map<CanonicalAnswer, std::size_t, CanonicalAnswerHash> index;
  for (const Response* r : incorrect) {
    if (!r->answer) continue;
    auto [it, inserted] = index.emplace(*r->answer, wrong_table.entries.size());
    if (inserted)
      wrong_table.entries.push_back({*r->answer, 1});
    else
      ++wrong_table.entries[it->second].count;
  }
  if (wrong_table.entries.empty()) return std::nullopt;  // wrong but unparseable: nothing usable
  const CanonicalAnswer& modal_wrong = mode_answer(wrong_table);
  for (const Response* r : incorrect)
    if (r->answer && *r->answer == modal_wrong) picked.push_back(*r);
  return picked;
}

// Softmax over raw complexity values used as logits; max-subtraction keeps
// the exponentials in range.
inline const Response& complexity_softmax_sample(const std::vector<Response>& candidates,
                                                 double temperature, Rng& rng) {
  if (candidates.empty()) throw ConfigError("complexity_softmax_sample: no candidates");
  if (temperature <= 0) throw ConfigError("softmax temperature must be > 0");
  double max_c = -1;
  for (const auto& r : candidates) {
    if (!r.complexity)
      throw MissingComplexityError("candidate " + r.query_id + "#" +
                                   std::to_string(r.sample_index) + " has no complexity");
    max_c = std::max(max_c, static_cast<double>(*r.complexity));
  }
  std::vector<double> weights;
  weights.reserve(candidates.size());
  for (const auto& r : candidates)
    weights.push_back(std::exp((static_cast<double>(*r.complexity) - max_c) / temperature));
  return candidates[next_discrete(rng, weights)];
}

inline std::vector<Response> filter_generators(const std::vector<Response>& responses,
                                               const std::set<std::string>& allowed) {
  std::vector<Response> out;
  for (const auto& r : responses)
    if (allowed.contains(r.generator_id)) out.push_back(r);
  return out;
}

inline std::vector<Query> cr_band_filter(
    const std::vector<std::pair<Query, CertaintyReport>>& query_reports, const CrBand& band) {
  std::vector<Query> kept;
  for (const auto& [query, report] : query_reports) {
    if (!report.correctness_rate)
      throw ConfigError("cr_band_filter: report for " + query.id + " has no correctness rate");
    if (band.contains(*report.correctness_rate)) kept.push_back(query);
  }
  return kept;
}

// Staged drop accounting for the selection funnel.
struct FunnelReport {
  struct Stage {
    std::string name;
    int in_count = 0;
    int out_count = 0;
  };
  std::vector<Stage> stages;
  std::map<std::string, int> drop_reasons;

  void write_csv(const std::string& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + path);
    out << "stage,in_count,out_count\n";
    for (const auto& s : stages) out << s.name << "," << s.in_count << "," << s.out_count << "\n";
    out << "reason,count,\n";
    for (const auto& [reason, count] : drop_reasons) out << reason << "," << count << ",\n";
  }
};

struct AssembleResult {
  std::vector<BenchmarkTriplet> triplets;
  FunnelReport funnel;
};

namespace selection_detail {

inline ExtRational bag_cr(const AnswerBag& bag, const Query& query) {
  if (query.source_task == TaskKind::code) return surrogate_cr_code(bag);
  if (!query.expected) throw ConfigError("query " + query.id + " has no gold answer");
  return correctness_rate_exact(bag, *query.expected);
}

inline int complexity_or_compute(const Response& r, ComplexityHeuristic h) {
  return r.complexity ? *r.complexity : complexity_of(r.raw_text, h);
}

}  // namespace selection_detail

// Full benchmark assembly: CR-band query selection, generator filtering,
// then one complexity-softmax-sampled correct and one convincing-wrong
// response per surviving (query, generator). The output is balanced by
// construction and deterministically shuffled by the config seed.
inline AssembleResult assemble_triplets(const std::vector<AnswerBag>& bags,
                                        const std::map<std::string, Query>& queries,
                                        const SelectionConfig& cfg, Rng& rng) {
  cfg.validate();
  AssembleResult result;
  auto& funnel = result.funnel;
  auto drop = [&funnel](const std::string& reason) { ++funnel.drop_reasons[reason]; };

  // Stage 1: queries surviving the CR band.
  std::vector<const AnswerBag*> banded;
  for (const auto& bag : bags) {
    auto qit = queries.find(bag.query_id);
    if (qit == queries.end()) {
      drop("unknown-query");
      continue;
    }
    ExtRational cr;
    try {
      cr = selection_detail::bag_cr(bag, qit->second);
    } catch (const EmptyBagError&) {
      drop("no-parsed-answers");
      continue;
    } catch (const UngradedBagError&) {
      drop("ungraded");
      continue;
    }
    if (!cfg.cr_band.contains(cr)) {
      drop("cr-out-of-band");
      continue;
    }
    banded.push_back(&bag);
  }
  funnel.stages.push_back({"cr_band", static_cast<int>(bags.size()), static_cast<int>(banded.size())});

  // Stage 2: per-(query, generator) pair selection.
  int pairs_in = 0;
  std::vector<BenchmarkTriplet> triplets;
  for (const AnswerBag* bag : banded) {
    const Query& query = queries.at(bag->query_id);

    auto convincing = pick_convincing_wrong(*bag);
    if (!convincing) {
      drop("all-correct");
      continue;
    }

    // generators in first-seen order, restricted to the allowed set
    std::vector<std::string> generators;
    for (const auto& r : bag->responses) {
      if (!cfg.allowed_generators.empty() && !cfg.allowed_generators.contains(r.generator_id)) continue;
      if (std::find(generators.begin(), generators.end(), r.generator_id) == generators.end())
        generators.push_back(r.generator_id);
    }
    if (generators.empty()) {
      drop("no-allowed-generator");
      continue;
    }

    for (const auto& gen : generators) {
      ++pairs_in;
      std::vector<Response> correct_side;
      for (const auto& r : bag->responses)
        if (r.generator_id == gen && r.correct && *r.correct) correct_side.push_back(r);
      std::vector<Response> wrong_side;
      for (const auto& r : *convincing)
        if (r.generator_id == gen) wrong_side.push_back(r);

      if (correct_side.empty()) {
        drop("no-correct-candidate");
        continue;
      }
      if (wrong_side.empty()) {
        drop("no-convincing-wrong-candidate");
        continue;
      }
      for (auto* side : {&correct_side, &wrong_side})
        for (auto& r : *side)
          if (!r.complexity)
            r.complexity = selection_detail::complexity_or_compute(r, cfg.complexity_heuristic);

      const Response& picked_correct =
          complexity_softmax_sample(correct_side, cfg.softmax_temperature, rng);
      const Response& picked_wrong =
          complexity_softmax_sample(wrong_side, cfg.softmax_temperature, rng);
      triplets.push_back({query, picked_correct, Judgment::correct});
      triplets.push_back({query, picked_wrong, Judgment::incorrect});
    }
  }
  funnel.stages.push_back({"pair_selection", pairs_in, static_cast<int>(triplets.size()) / 2});

  deterministic_shuffle(triplets, rng);
  result.triplets = std::move(triplets);
  return result;
}

}  // namespace certeval

#endif  // CERTEVAL_SELECTION_HPP_
