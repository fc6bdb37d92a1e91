// certeval: certainty metrics, benchmark construction, critic evaluation,
// and self-check decoding over JSONL datasets.

#include <filesystem>
#include <iostream>
#include <limits>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "certeval/certeval.hpp"
#include "certeval/remote.hpp"
#include "certeval/runconfig.hpp"

namespace fs = std::filesystem;
using namespace certeval;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitBadConfig = 2;
constexpr int kExitReplayMiss = 3;
constexpr int kExitEmptyResult = 4;
constexpr int kExitBackendFailure = 5;

struct CommonArgs {
  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed_override;
  std::optional<std::string> backend_override;
};

// The backend actually used for transport may be "replay", which serves
// recorded samples. Manifests and generator ids always name the backend
// that generated the samples, so a replayed run is indistinguishable from
// the original one.
struct Loaded {
  RunConfig cfg;
  std::string transport;  // synthetic | replay | remote
  std::string generator_label;
};

std::string backend_label(const RunConfig& cfg, const std::string& name) {
  if (name == "remote") return "remote:" + cfg.remote.model;
  return name;
}

Loaded load_config(const CommonArgs& args) {
  Loaded loaded;
  loaded.cfg = RunConfig::from_file(args.config_path);
  if (args.seed_override) loaded.cfg.seed = *args.seed_override;
  loaded.transport = args.backend_override.value_or(loaded.cfg.backend);
  if (loaded.transport != "synthetic" && loaded.transport != "replay" &&
      loaded.transport != "remote")
    throw ConfigError("unknown backend: " + loaded.transport);
  loaded.generator_label = backend_label(
      loaded.cfg, loaded.transport == "replay" ? loaded.cfg.backend : loaded.transport);
  fs::create_directories(args.out_dir);
  return loaded;
}

std::unique_ptr<Backend> make_backend(const Loaded& loaded, const SampleCache& cache,
                                      const std::string& manifest_hash) {
  if (loaded.transport == "synthetic") {
    SyntheticModelSpec spec = loaded.cfg.synthetic;
    if (spec.seed == 0) spec.seed = loaded.cfg.seed;
    return std::make_unique<SyntheticBackend>(spec);
  }
  if (loaded.transport == "replay") return std::make_unique<ReplayBackend>(cache, manifest_hash);
  return std::make_unique<RemoteBackend>(loaded.cfg.remote);
}

std::string render_prompt(const RunConfig& cfg, const Query& q) {
  std::string prompt = cfg.prompt_template;
  const std::string placeholder = "{query}";
  if (auto pos = prompt.find(placeholder); pos != std::string::npos)
    prompt.replace(pos, placeholder.size(), q.text);
  return prompt;
}

std::map<std::string, Query> index_queries(const std::vector<Query>& queries) {
  std::map<std::string, Query> by_id;
  for (const auto& q : queries) {
    if (!by_id.emplace(q.id, q).second) throw ConfigError("duplicate query id " + q.id);
  }
  return by_id;
}

AnswerBag build_bag(const Query& query, const std::vector<std::string>& texts,
                    const std::string& generator_id, const RunConfig& cfg) {
  AnswerBag bag;
  bag.query_id = query.id;
  bag.k = static_cast<int>(texts.size());
  for (std::size_t i = 0; i < texts.size(); ++i) {
    Response r;
    r.query_id = query.id;
    r.generator_id = generator_id;
    r.raw_text = texts[i];
    r.sample_index = static_cast<int>(i);
    r.complexity = complexity_of(texts[i], cfg.selection.complexity_heuristic);
    if (query.source_task != TaskKind::code) {
      try {
        r.answer = extract_final_answer(texts[i], query.source_task, cfg.extraction);
      } catch (const ExtractionFailedError&) {
        // invalid output: kept in k, excluded from frequency counts
      }
    }
    bag.responses.push_back(std::move(r));
  }
  return bag;
}

std::vector<AnswerBag> sample_bags(const std::vector<Query>& queries, const Loaded& loaded,
                                   SampleCache& cache) {
  const RunConfig& cfg = loaded.cfg;
  std::vector<AnswerBag> bags;
  for (const auto& q : queries) {
    const RunManifest manifest = cfg.manifest_for(q.source_task, loaded.generator_label);
    auto backend = make_backend(loaded, cache, manifest.content_hash());
    std::vector<std::string> texts;
    if (loaded.transport == "replay") {
      texts = backend->generate(q.id, render_prompt(cfg, q), manifest.params);
    } else {
      texts = generate_cached(*backend, cache, q.id, manifest, render_prompt(cfg, q));
    }
    bags.push_back(build_bag(q, texts, loaded.generator_label, cfg));
  }
  return bags;
}

// Grades in place. Returns the number of per-line problems reported.
int grade_bags(std::vector<AnswerBag>& bags, const std::map<std::string, Query>& queries,
               const RunConfig& cfg) {
  int warnings = 0;
  std::unique_ptr<CommandTestRunner> runner;
  for (auto& bag : bags) {
    auto qit = queries.find(bag.query_id);
    if (qit == queries.end()) {
      std::cerr << "warning: bag for unknown query " << bag.query_id << "\n";
      ++warnings;
      continue;
    }
    const Query& query = qit->second;
    if (query.source_task == TaskKind::code) {
      if (cfg.runner_command.empty())
        throw InfrastructureError("code grading requires runner_command in the config");
      if (!runner)
        runner = std::make_unique<CommandTestRunner>(cfg.runner_command, cfg.runner_timeout_seconds);
      bool already_graded = true;
      for (const auto& r : bag.responses)
        if (!r.correct || !r.answer || r.answer->kind() != AnswerKind::pass_profile)
          already_graded = false;
      if (already_graded) continue;
      auto outcomes = grade_code_bag(bag, query, *runner);
      for (std::size_t i = 0; i < bag.responses.size(); ++i) {
        bag.responses[i].correct = outcomes[i].correct;
        bag.responses[i].answer =
            CanonicalAnswer::pass_profile(outcomes[i].passed, outcomes[i].total);
      }
      continue;
    }
    if (!query.expected) {
      std::cerr << "warning: query " << query.id << " has no gold answer; bag left ungraded\n";
      ++warnings;
      continue;
    }
    for (auto& r : bag.responses)
      r.correct = r.answer ? grade_against_expected(*r.answer, *query.expected).correct : false;
  }
  return warnings;
}

std::unique_ptr<JudgmentSource> make_critic(const Loaded& loaded, Backend* backend) {
  const RunConfig& cfg = loaded.cfg;
  if (loaded.transport == "synthetic")
    return std::make_unique<SyntheticCritic>(cfg.synthetic.sensitivity, cfg.synthetic.specificity,
                                             cfg.seed == 0 ? cfg.synthetic.seed : cfg.seed);
  return std::make_unique<BackendCritic>(*backend, cfg.critic_prompt_template,
                                         cfg.critic_eval.judgment_temperature);
}

int cmd_sample(const CommonArgs& args, const std::string& queries_path) {
  const Loaded loaded = load_config(args);
  const RunConfig& cfg = loaded.cfg;
  const auto queries = read_jsonl<Query>(queries_path);
  SampleCache cache(cfg.cache_path);
  auto bags = sample_bags(queries, loaded, cache);
  write_jsonl((fs::path(args.out_dir) / "bags.jsonl").string(), bags);
  if (!queries.empty()) {
    const RunManifest manifest =
        cfg.manifest_for(queries.front().source_task, loaded.generator_label);
    std::ofstream out(fs::path(args.out_dir) / "manifest.json");
    out << nlohmann::json(manifest).dump(2) << "\n";
  }
  std::cerr << "sampled " << bags.size() << " bags\n";
  return kExitOk;
}

int cmd_grade(const CommonArgs& args, const std::string& bags_path,
              const std::string& queries_path) {
  const RunConfig cfg = load_config(args).cfg;
  const auto queries = index_queries(read_jsonl<Query>(queries_path));
  auto bags = read_jsonl<AnswerBag>(bags_path);
  const int warnings = grade_bags(bags, queries, cfg);
  write_jsonl((fs::path(args.out_dir) / "graded_bags.jsonl").string(), bags);
  std::cerr << "graded " << bags.size() << " bags, " << warnings << " warnings\n";
  return kExitOk;
}

int cmd_build_bench(const CommonArgs& args, const std::string& bags_path,
                    const std::string& queries_path) {
  const RunConfig cfg = load_config(args).cfg;
  const auto queries = index_queries(read_jsonl<Query>(queries_path));
  const auto bags = read_jsonl<AnswerBag>(bags_path);
  const std::uint64_t seed = cfg.selection.seed != 0 ? cfg.selection.seed : cfg.seed;
  Rng rng = derive_rng(seed, "build-bench");
  auto result = assemble_triplets(bags, queries, cfg.selection, rng);
  result.funnel.write_csv((fs::path(args.out_dir) / "funnel.csv").string());
  write_jsonl((fs::path(args.out_dir) / "triplets.jsonl").string(), result.triplets);
  std::cerr << "assembled " << result.triplets.size() << " triplets\n";
  if (result.triplets.empty()) {
    std::cerr << "error: no queries survived selection; see funnel.csv\n";
    return kExitEmptyResult;
  }
  return kExitOk;
}

int cmd_eval_critic(const CommonArgs& args, const std::string& triplets_path,
                    const std::string& bags_path) {
  const Loaded loaded = load_config(args);
  const RunConfig& cfg = loaded.cfg;
  const auto triplets = read_jsonl<BenchmarkTriplet>(triplets_path);
  SampleCache cache(cfg.cache_path);
  const RunManifest manifest = cfg.manifest_for(TaskKind::other, loaded.generator_label);
  auto backend = make_backend(loaded, cache, manifest.content_hash());
  auto critic = make_critic(loaded, backend.get());
  const std::string& critic_id = loaded.generator_label;

  auto report = evaluate_critic(triplets, critic_id, *critic, cfg.critic_eval, cfg.extraction);
  {
    std::ofstream out(fs::path(args.out_dir) / "critic_report.json");
    out << nlohmann::json(report).dump(2) << "\n";
  }
  write_heatmap_csv(report, (fs::path(args.out_dir) / "heatmap.csv").string(), {},
                    manifest.content_hash());

  if (!bags_path.empty()) {
    const auto bags = read_jsonl<AnswerBag>(bags_path);
    std::vector<CertaintyObservation> observations;
    for (const auto& bag : bags) {
      auto acc = report.per_query_accuracy.find(bag.query_id);
      if (acc == report.per_query_accuracy.end()) continue;
      CertaintyObservation obs;
      obs.query_id = bag.query_id;
      try {
        obs.certainty = certainty_score(bag);
      } catch (const EmptyBagError&) {
        continue;
      }
      obs.critique_accuracy = acc->second;
      observations.push_back(obs);
    }
    const std::vector<double> edges{0, 0.5, 1.0, 1.5, 2.0, std::numeric_limits<double>::infinity()};
    auto table = certainty_correlation_report(observations, edges);
    write_bin_table_csv(table, (fs::path(args.out_dir) / "certainty_bins.csv").string(),
                        manifest.content_hash());
  }

  int incomplete = 0;
  for (const auto& cell : report.cells) incomplete += cell.incomplete;
  std::cerr << "mean accuracy " << report.mean_accuracy << " over " << report.runs_per_model
            << " runs; " << incomplete << " incomplete cells\n";
  return kExitOk;
}

int cmd_sc2(const CommonArgs& args, const std::string& queries_path) {
  const Loaded loaded = load_config(args);
  const RunConfig& cfg = loaded.cfg;
  const auto queries = read_jsonl<Query>(queries_path);
  const auto by_id = index_queries(queries);
  SampleCache cache(cfg.cache_path);
  auto bags = sample_bags(queries, loaded, cache);
  grade_bags(bags, by_id, cfg);

  const RunManifest manifest = cfg.manifest_for(TaskKind::other, loaded.generator_label);
  auto backend = make_backend(loaded, cache, manifest.content_hash());
  auto verifier = make_critic(loaded, backend.get());

  std::vector<nlohmann::json> rows;
  long sc_correct = 0, sc2_correct = 0, graded = 0, verifier_calls = 0;
  for (std::size_t i = 0; i < queries.size(); ++i) {
    const Query& q = queries[i];
    const AnswerBag& bag = bags[i];
    auto result = sc2_vote(bag, q, *verifier, cfg.sc2, cfg.extraction);
    verifier_calls += result.verifier_calls;
    nlohmann::json row{{"query_id", q.id},
                       {"sc_answer", result.sc_answer},
                       {"certainty", std::isinf(result.certainty) ? nlohmann::json("inf")
                                                                  : nlohmann::json(result.certainty)},
                       {"used_self_check", result.used_self_check},
                       {"verifier_calls", result.verifier_calls},
                       {"abstained", result.abstained}};
    if (result.answer) row["sc2_answer"] = *result.answer;
    rows.push_back(std::move(row));
    if (q.expected && q.expected->kind() != AnswerKind::pass_profile) {
      ++graded;
      auto hits = [&](const std::optional<CanonicalAnswer>& a) {
        return a && a->kind() == q.expected->kind() && answers_equal(*a, *q.expected);
      };
      sc_correct += hits(result.sc_answer);
      sc2_correct += hits(result.answer);
    }
  }
  write_jsonl((fs::path(args.out_dir) / "answers.jsonl").string(), rows);

  if (graded > 0) {
    const double sc_acc = 100.0 * sc_correct / graded;
    const double sc2_acc = 100.0 * sc2_correct / graded;
    std::vector<Sc2SummaryRow> summary_rows;
    if (sc_acc < 100.0) summary_rows.push_back({loaded.generator_label, sc_acc, sc2_acc});
    auto summary = sc2_benchmark_report(summary_rows);
    write_sc2_summary_csv(summary, (fs::path(args.out_dir) / "sc2_summary.csv").string(),
                          manifest.content_hash());
    std::cerr << "SC " << sc_acc << "% -> SC2 " << sc2_acc << "% (" << verifier_calls
              << " verifier calls)\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"certainty metrics, critique benchmarks, and self-check decoding"};
  app.require_subcommand(1);

  CommonArgs common;
  std::string queries_path, bags_path, triplets_path;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config_path, "run config JSON")->required();
    sub->add_option("--out", common.out_dir, "output directory");
    sub->add_option("--seed", common.seed_override, "seed override");
    sub->add_option("--backend", common.backend_override, "backend override");
  };

  auto* sample = app.add_subcommand("sample", "sample k responses per query into bags.jsonl");
  add_common(sample);
  sample->add_option("--queries", queries_path, "queries.jsonl")->required();

  auto* grade = app.add_subcommand("grade", "annotate bag responses for correctness");
  add_common(grade);
  grade->add_option("--bags", bags_path, "bags.jsonl")->required();
  grade->add_option("--queries", queries_path, "queries.jsonl")->required();

  auto* bench = app.add_subcommand("build-bench", "assemble balanced benchmark triplets");
  add_common(bench);
  bench->add_option("--bags", bags_path, "graded bags.jsonl")->required();
  bench->add_option("--queries", queries_path, "queries.jsonl")->required();

  auto* eval = app.add_subcommand("eval-critic", "score critic judgments over triplets");
  add_common(eval);
  eval->add_option("--triplets", triplets_path, "triplets.jsonl")->required();
  eval->add_option("--bags", bags_path, "optional bags.jsonl for certainty bins");

  auto* sc2 = app.add_subcommand("sc2", "self-consistency with selective self-check");
  add_common(sc2);
  sc2->add_option("--queries", queries_path, "queries.jsonl")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (sample->parsed()) return cmd_sample(common, queries_path);
    if (grade->parsed()) return cmd_grade(common, bags_path, queries_path);
    if (bench->parsed()) return cmd_build_bench(common, bags_path, queries_path);
    if (eval->parsed()) return cmd_eval_critic(common, triplets_path, bags_path);
    if (sc2->parsed()) return cmd_sc2(common, queries_path);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitBadConfig;
  } catch (const ReplayMissError& e) {
    std::cerr << "replay miss: " << e.what() << "\n";
    return kExitReplayMiss;
  } catch (const BackendUnavailableError& e) {
    std::cerr << "backend failure: " << e.what() << "\n";
    return kExitBackendFailure;
  } catch (const InfrastructureError& e) {
    std::cerr << "infrastructure error: " << e.what() << "\n";
    return kExitBackendFailure;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitOk;
}
