#ifndef CERTEVAL_PIPELINES_HPP_
#define CERTEVAL_PIPELINES_HPP_

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "certeval/backends.hpp"
#include "certeval/extraction.hpp"
#include "certeval/metrics.hpp"
#include "certeval/types.hpp"

namespace certeval {

enum class EmptyFilterFallback { unfiltered_vote, abstain };

struct Sc2Config {
  double certainty_threshold = 1.0;  // +inf means "always self-check"
  std::string verifier_template_id = "default";
  EmptyFilterFallback fallback = EmptyFilterFallback::unfiltered_vote;

  void validate() const {
    if (certainty_threshold < 0) throw ConfigError("certainty threshold must be >= 0");
  }
};

inline void to_json(nlohmann::json& j, const Sc2Config& c) {
  j = nlohmann::json{
      {"certainty_threshold", std::isinf(c.certainty_threshold)
                                  ? nlohmann::json("inf")
                                  : nlohmann::json(c.certainty_threshold)},
      {"verifier_template_id", c.verifier_template_id},
      {"fallback", c.fallback == EmptyFilterFallback::abstain ? "abstain" : "unfiltered-vote"}};
}
inline void from_json(const nlohmann::json& j, Sc2Config& c) {
  if (j.contains("certainty_threshold")) {
    const auto& t = j.at("certainty_threshold");
    c.certainty_threshold =
        t.is_string() && t.get<std::string>() == "inf" ? std::numeric_limits<double>::infinity()
                                                       : t.get<double>();
  }
  if (j.contains("verifier_template_id")) j.at("verifier_template_id").get_to(c.verifier_template_id);
  if (j.contains("fallback")) {
    const auto s = j.at("fallback").get<std::string>();
    if (s == "abstain")
      c.fallback = EmptyFilterFallback::abstain;
    else if (s == "unfiltered-vote")
      c.fallback = EmptyFilterFallback::unfiltered_vote;
    else
      throw ConfigError("unknown fallback: " + s);
  }
  c.validate();
}

struct CriticEvalConfig {
  double judgment_temperature = 0.6;
  int runs_per_model = 8;
  std::map<std::string, std::string> prompt_template_per_task;

  void validate() const {
    if (runs_per_model < 1) throw ConfigError("runs_per_model must be >= 1");
    if (judgment_temperature < 0) throw ConfigError("judgment temperature must be >= 0");
  }
};

inline void to_json(nlohmann::json& j, const CriticEvalConfig& c) {
  j = nlohmann::json{{"judgment_temperature", c.judgment_temperature},
                     {"runs_per_model", c.runs_per_model},
                     {"prompt_template_per_task", c.prompt_template_per_task}};
}
inline void from_json(const nlohmann::json& j, CriticEvalConfig& c) {
  if (j.contains("judgment_temperature")) j.at("judgment_temperature").get_to(c.judgment_temperature);
  if (j.contains("runs_per_model")) j.at("runs_per_model").get_to(c.runs_per_model);
  if (j.contains("prompt_template_per_task"))
    j.at("prompt_template_per_task").get_to(c.prompt_template_per_task);
  c.validate();
}

// Majority vote over the bag, exposed as a pipeline stage.
inline CanonicalAnswer self_consistency(const AnswerBag& bag) { return majority_vote(bag); }

// Keeps the responses the verifier judges correct; the result may be empty.
inline AnswerBag self_check_filter(const AnswerBag& bag, const Query& query,
                                   JudgmentSource& verifier, const ExtractionRules& rules) {
  AnswerBag filtered;
  filtered.query_id = bag.query_id;
  for (const auto& r : bag.responses) {
    const std::string critique = verifier.critique(query, r);
    if (extract_judgment(critique, rules) == Judgment::correct) filtered.responses.push_back(r);
  }
  filtered.k = static_cast<int>(filtered.responses.size());
  return filtered;
}

struct Sc2Result {
  std::optional<CanonicalAnswer> answer;  // empty only when abstained
  bool abstained = false;
  bool used_self_check = false;
  int verifier_calls = 0;
  CanonicalAnswer sc_answer;  // the plain self-consistency vote
  double certainty = 0;
};

// Self-consistency with selective self-check: when the bag's certainty is
// below the threshold, candidates the verifier rejects are dropped before
// the vote (multiplicity preserved). An empty filtered set falls back per
// config; the abstain fallback yields an explicit empty answer, never a
// fabricated one.
inline Sc2Result sc2_vote(const AnswerBag& bag, const Query& query, JudgmentSource& verifier,
                          const Sc2Config& cfg, const ExtractionRules& rules = {}) {
  cfg.validate();
  Sc2Result result;
  result.sc_answer = self_consistency(bag);
  result.certainty = certainty_score(bag);
  if (result.certainty >= cfg.certainty_threshold) {
    result.answer = result.sc_answer;
    return result;
  }
  result.used_self_check = true;
  AnswerBag filtered = self_check_filter(bag, query, verifier, rules);
  result.verifier_calls = static_cast<int>(bag.responses.size());
  if (filtered.responses.empty()) {
    if (cfg.fallback == EmptyFilterFallback::abstain) {
      result.abstained = true;
      return result;
    }
    result.answer = result.sc_answer;
    return result;
  }
  try {
    result.answer = majority_vote(filtered);
  } catch (const EmptyBagError&) {
    // survivors exist but none parsed; same degenerate case as an empty filter
    if (cfg.fallback == EmptyFilterFallback::abstain)
      result.abstained = true;
    else
      result.answer = result.sc_answer;
  }
  return result;
}

// ---------------------------------------------------------------------------
// Critic evaluation (judgment accuracy over benchmark triplets).
// ---------------------------------------------------------------------------

struct NamedCritic {
  std::string critic_id;
  JudgmentSource* source = nullptr;
};

struct CriticEvalReport {
  double judgment_temperature = 0.6;
  int runs_per_model = 8;
  int n_triplets = 0;
  std::vector<double> per_run_accuracy;  // over all critics and triplets
  double mean_accuracy = 0;
  std::map<std::string, double> per_task_accuracy;

  struct Cell {
    std::string critic_id;
    std::string generator_id;
    double accuracy = 0;
    int n_triplets = 0;
    int completed_runs = 0;
    int failures = 0;
    bool incomplete = false;
  };
  std::vector<Cell> cells;
  std::map<std::string, double> self_critique_accuracy;  // critic_id == generator_id
  std::map<std::string, double> per_query_accuracy;
};

// For every triplet, samples one judgment per run per critic at the
// configured temperature, extracts the final judgment, and scores it
// against the gold label. Only the final judgment is scored; the critique's
// reasoning is ignored.
inline CriticEvalReport evaluate_critics(const std::vector<BenchmarkTriplet>& triplets,
                                         const std::vector<NamedCritic>& critics,
                                         const CriticEvalConfig& cfg,
                                         const ExtractionRules& rules = {}) {
  cfg.validate();
  if (critics.empty()) throw ConfigError("no critics given");
  CriticEvalReport report;
  report.judgment_temperature = cfg.judgment_temperature;
  report.runs_per_model = cfg.runs_per_model;
  report.n_triplets = static_cast<int>(triplets.size());

  struct CellAcc {
    long correct = 0, judged = 0, failures = 0;
    int completed_runs = 0, n_triplets = 0;
  };
  std::map<std::pair<std::string, std::string>, CellAcc> cell_acc;
  std::map<std::string, std::pair<long, long>> task_acc;   // correct, judged
  std::map<std::string, std::pair<long, long>> query_acc;  // correct, judged

  for (int run = 0; run < cfg.runs_per_model; ++run) {
    long run_correct = 0, run_judged = 0;
    std::map<std::pair<std::string, std::string>, bool> run_failed;
    for (const auto& critic : critics) {
      for (const auto& t : triplets) {
        const auto cell_key = std::make_pair(critic.critic_id, t.response.generator_id);
        auto& acc = cell_acc[cell_key];
        if (run == 0) ++acc.n_triplets;
        try {
          const std::string critique = critic.source->critique(t.query, t.response);
          const Judgment verdict = extract_judgment(critique, rules);
          const bool hit = verdict == t.gold_judgment;
          acc.correct += hit;
          ++acc.judged;
          run_correct += hit;
          ++run_judged;
          auto& [tc, tj] = task_acc[to_string(t.query.source_task)];
          tc += hit;
          ++tj;
          auto& [qc, qj] = query_acc[t.query.id];
          qc += hit;
          ++qj;
        } catch (const Error&) {
          ++acc.failures;
          run_failed[cell_key] = true;
        }
      }
    }
    for (auto& [key, acc] : cell_acc)
      if (!run_failed.contains(key)) ++acc.completed_runs;
    report.per_run_accuracy.push_back(run_judged ? static_cast<double>(run_correct) / run_judged : 0);
  }

  double sum = 0;
  for (double a : report.per_run_accuracy) sum += a;
  report.mean_accuracy = report.per_run_accuracy.empty() ? 0 : sum / report.per_run_accuracy.size();

  for (const auto& [task, cj] : task_acc)
    report.per_task_accuracy[task] = cj.second ? static_cast<double>(cj.first) / cj.second : 0;
  for (const auto& [qid, cj] : query_acc)
    report.per_query_accuracy[qid] = cj.second ? static_cast<double>(cj.first) / cj.second : 0;

  for (const auto& [key, acc] : cell_acc) {
    CriticEvalReport::Cell cell;
    cell.critic_id = key.first;
    cell.generator_id = key.second;
    cell.accuracy = acc.judged ? static_cast<double>(acc.correct) / acc.judged : 0;
    cell.n_triplets = acc.n_triplets;
    cell.completed_runs = acc.completed_runs;
    cell.failures = static_cast<int>(acc.failures);
    cell.incomplete = acc.completed_runs < cfg.runs_per_model;
    report.cells.push_back(cell);
    if (cell.critic_id == cell.generator_id)
      report.self_critique_accuracy[cell.critic_id] = cell.accuracy;
  }
  return report;
}

inline CriticEvalReport evaluate_critic(const std::vector<BenchmarkTriplet>& triplets,
                                        const std::string& critic_id, JudgmentSource& source,
                                        const CriticEvalConfig& cfg,
                                        const ExtractionRules& rules = {}) {
  return evaluate_critics(triplets, {{critic_id, &source}}, cfg, rules);
}

inline void to_json(nlohmann::json& j, const CriticEvalReport::Cell& c) {
  j = nlohmann::json{{"critic_id", c.critic_id},     {"generator_id", c.generator_id},
                     {"accuracy", c.accuracy},       {"n_triplets", c.n_triplets},
                     {"completed_runs", c.completed_runs}, {"failures", c.failures},
                     {"incomplete", c.incomplete}};
}
inline void to_json(nlohmann::json& j, const CriticEvalReport& r) {
  j = nlohmann::json{{"judgment_temperature", r.judgment_temperature},
                     {"runs_per_model", r.runs_per_model},
                     {"n_triplets", r.n_triplets},
                     {"per_run_accuracy", r.per_run_accuracy},
                     {"mean_accuracy", r.mean_accuracy},
                     {"per_task_accuracy", r.per_task_accuracy},
                     {"cells", r.cells},
                     {"self_critique_accuracy", r.self_critique_accuracy},
                     {"per_query_accuracy", r.per_query_accuracy}};
}

// Heatmap matrix CSV: rows = critic id, cols = generator id, cell = mean
// judgment accuracy. Row/column order follows the supplied size ordering
// when given, else lexicographic.
inline void write_heatmap_csv(const CriticEvalReport& report, const std::string& path,
                              const std::vector<std::string>& size_order = {},
                              const std::string& manifest_hash = "") {
  std::vector<std::string> critics, generators;
  auto ordered_insert = [&size_order](std::vector<std::string>& v, const std::string& id) {
    if (std::find(v.begin(), v.end(), id) != v.end()) return;
    v.push_back(id);
  };
  for (const auto& c : report.cells) {
    ordered_insert(critics, c.critic_id);
    ordered_insert(generators, c.generator_id);
  }
  auto rank = [&size_order](const std::string& id) {
    auto it = std::find(size_order.begin(), size_order.end(), id);
    return it == size_order.end() ? size_order.size() : static_cast<std::size_t>(it - size_order.begin());
  };
  auto cmp = [&rank](const std::string& a, const std::string& b) {
    auto ra = rank(a), rb = rank(b);
    return ra != rb ? ra < rb : a < b;
  };
  std::sort(critics.begin(), critics.end(), cmp);
  std::sort(generators.begin(), generators.end(), cmp);

  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path);
  if (!manifest_hash.empty()) out << "# manifest=" << manifest_hash << "\n";
  out << "critic";
  for (const auto& g : generators) out << "," << g;
  out << "\n";
  for (const auto& c : critics) {
    out << c;
    for (const auto& g : generators) {
      out << ",";
      for (const auto& cell : report.cells)
        if (cell.critic_id == c && cell.generator_id == g) {
          out << cell.accuracy;
          break;
        }
    }
    out << "\n";
  }
}

// ---------------------------------------------------------------------------
// Certainty-vs-accuracy binning and the Table-1-style summary.
// ---------------------------------------------------------------------------

struct CertaintyObservation {
  std::string query_id;
  double certainty = 0;
  std::optional<double> correctness_rate;
  double critique_accuracy = 0;
};

struct CertaintyBinTable {
  struct Bin {
    double low = 0, high = 0;
    int count = 0;
    double mean_accuracy = 0;
  };
  std::vector<Bin> bins;
  std::vector<std::pair<double, double>> scatter;  // (certainty, CR) pairs
};

// Bins queries by certainty and reports per-bin mean critique accuracy.
// Values past the outer edges clamp into the boundary bins, so +inf
// certainty lands in the top bin. Empty bins are emitted with count 0.
inline CertaintyBinTable certainty_correlation_report(
    const std::vector<CertaintyObservation>& observations, const std::vector<double>& bin_edges) {
  if (bin_edges.size() < 2) throw ConfigError("need at least two bin edges");
  for (std::size_t i = 1; i < bin_edges.size(); ++i)
    if (!(bin_edges[i - 1] < bin_edges[i])) throw ConfigError("bin edges must be increasing");

  CertaintyBinTable table;
  const std::size_t n_bins = bin_edges.size() - 1;
  std::vector<double> sums(n_bins, 0.0);
  for (std::size_t i = 0; i < n_bins; ++i)
    table.bins.push_back({bin_edges[i], bin_edges[i + 1], 0, 0});

  for (const auto& obs : observations) {
    std::size_t bin = n_bins - 1;
    for (std::size_t i = 0; i < n_bins; ++i)
      if (obs.certainty < bin_edges[i + 1]) {
        bin = i;
        break;
      }
    ++table.bins[bin].count;
    sums[bin] += obs.critique_accuracy;
    if (obs.correctness_rate) table.scatter.emplace_back(obs.certainty, *obs.correctness_rate);
  }
  for (std::size_t i = 0; i < n_bins; ++i)
    if (table.bins[i].count) table.bins[i].mean_accuracy = sums[i] / table.bins[i].count;
  return table;
}

inline void write_bin_table_csv(const CertaintyBinTable& table, const std::string& path,
                                const std::string& manifest_hash = "") {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path);
  if (!manifest_hash.empty()) out << "# manifest=" << manifest_hash << "\n";
  out << "bin_low,bin_high,count,mean_accuracy\n";
  for (const auto& b : table.bins)
    out << b.low << "," << b.high << "," << b.count << "," << b.mean_accuracy << "\n";
}

struct Sc2SummaryRow {
  std::string model;
  double baseline_acc = 0;  // percent
  double sc2_acc = 0;       // percent
};

struct Sc2Summary {
  struct Row {
    std::string model;
    double baseline_acc = 0;
    double sc2_acc = 0;
    double error_reduction = 0;  // percent
  };
  std::vector<Row> rows;
  double mean_error_reduction = 0;
};

inline Sc2Summary sc2_benchmark_report(const std::vector<Sc2SummaryRow>& inputs) {
  Sc2Summary summary;
  double sum = 0;
  for (const auto& in : inputs) {
    const double err = error_reduction_rate(in.baseline_acc, in.sc2_acc);
    summary.rows.push_back({in.model, in.baseline_acc, in.sc2_acc, err});
    sum += err;
  }
  summary.mean_error_reduction = inputs.empty() ? 0 : sum / inputs.size();
  return summary;
}

inline void write_sc2_summary_csv(const Sc2Summary& summary, const std::string& path,
                                  const std::string& manifest_hash = "") {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path);
  if (!manifest_hash.empty()) out << "# manifest=" << manifest_hash << "\n";
  out << "model,baseline_acc,sc2_acc,error_reduction_rate\n";
  for (const auto& r : summary.rows)
    out << r.model << "," << r.baseline_acc << "," << r.sc2_acc << "," << r.error_reduction << "\n";
  out << "mean,,," << summary.mean_error_reduction << "\n";
}

// Accuracy of sc2_vote at each candidate threshold over a graded corpus;
// a diagnostic for choosing C, no rule prescribed.
struct ThresholdSweepRow {
  double threshold = 0;
  double accuracy = 0;
  long verifier_calls = 0;
};

inline std::vector<ThresholdSweepRow> sc2_threshold_sweep(
    const std::vector<std::pair<Query, AnswerBag>>& corpus, JudgmentSource& verifier,
    const std::vector<double>& thresholds, const ExtractionRules& rules = {}) {
  std::vector<ThresholdSweepRow> rows;
  for (double c : thresholds) {
    Sc2Config cfg;
    cfg.certainty_threshold = c;
    long correct = 0, calls = 0;
    for (const auto& [query, bag] : corpus) {
      if (!query.expected) throw ConfigError("threshold sweep needs gold answers");
      auto result = sc2_vote(bag, query, verifier, cfg, rules);
      calls += result.verifier_calls;
      if (result.answer && result.answer->kind() == query.expected->kind() &&
          answers_equal(*result.answer, *query.expected))
        ++correct;
    }
    rows.push_back({c, corpus.empty() ? 0 : static_cast<double>(correct) / corpus.size(), calls});
  }
  return rows;
}

}  // namespace certeval

#endif  // CERTEVAL_PIPELINES_HPP_
