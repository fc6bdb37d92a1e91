#ifndef CERTEVAL_RUNCONFIG_HPP_
#define CERTEVAL_RUNCONFIG_HPP_

#include <fstream>
#include <map>
#include <string>

#include <json.hpp>

#include "certeval/backends.hpp"
#include "certeval/extraction.hpp"
#include "certeval/pipelines.hpp"
#include "certeval/remote.hpp"
#include "certeval/selection.hpp"
#include "certeval/types.hpp"

namespace certeval {

// Whole-run configuration for the CLI. The seed is mandatory; everything
// else has workable defaults.
struct RunConfig {
  std::string backend = "synthetic";  // synthetic | replay | remote
  SyntheticModelSpec synthetic;
  RemoteEndpointConfig remote;
  std::map<std::string, SamplingParams> sampling;  // per task kind; "default" fallback
  SelectionConfig selection;
  Sc2Config sc2;
  CriticEvalConfig critic_eval;
  ExtractionRules extraction;
  std::string cache_path = "cache.jsonl";
  std::string runner_command;  // external test-runner template, {code} {tests}
  double runner_timeout_seconds = 10.0;
  std::string prompt_template = "{query}";
  std::string critic_prompt_template = "Query: {query}\nResponse: {response}\nCritique:";
  std::uint64_t seed = 0;

  const SamplingParams& params_for(TaskKind task) const {
    auto it = sampling.find(to_string(task));
    if (it != sampling.end()) return it->second;
    it = sampling.find("default");
    if (it != sampling.end()) return it->second;
    static const SamplingParams fallback;
    return fallback;
  }

  RunManifest manifest_for(TaskKind task, const std::string& backend_id) const {
    RunManifest m;
    m.seed = seed;
    m.backend_id = backend_id;
    m.params = params_for(task);
    m.prompt_template_hash = to_hex(fnv1a64(prompt_template));
    return m;
  }

  static RunConfig from_file(const std::string& path);
};

inline void to_json(nlohmann::json& j, const RunConfig& c) {
  j = nlohmann::json{{"backend", c.backend},
                     {"synthetic", c.synthetic},
                     {"remote", c.remote},
                     {"sampling", c.sampling},
                     {"selection", c.selection},
                     {"sc2", c.sc2},
                     {"critic_eval", c.critic_eval},
                     {"extraction", c.extraction},
                     {"cache_path", c.cache_path},
                     {"runner_command", c.runner_command},
                     {"runner_timeout_seconds", c.runner_timeout_seconds},
                     {"prompt_template", c.prompt_template},
                     {"critic_prompt_template", c.critic_prompt_template},
                     {"seed", c.seed}};
}
inline void from_json(const nlohmann::json& j, RunConfig& c) {
  if (!j.contains("seed")) throw ConfigError("config must set a seed");
  j.at("seed").get_to(c.seed);
  if (j.contains("backend")) j.at("backend").get_to(c.backend);
  if (c.backend != "synthetic" && c.backend != "replay" && c.backend != "remote")
    throw ConfigError("unknown backend: " + c.backend);
  if (j.contains("synthetic")) j.at("synthetic").get_to(c.synthetic);
  if (j.contains("remote")) j.at("remote").get_to(c.remote);
  if (j.contains("sampling")) j.at("sampling").get_to(c.sampling);
  if (j.contains("selection")) j.at("selection").get_to(c.selection);
  if (j.contains("sc2")) j.at("sc2").get_to(c.sc2);
  if (j.contains("critic_eval")) j.at("critic_eval").get_to(c.critic_eval);
  if (j.contains("extraction")) j.at("extraction").get_to(c.extraction);
  if (j.contains("cache_path")) j.at("cache_path").get_to(c.cache_path);
  if (j.contains("runner_command")) j.at("runner_command").get_to(c.runner_command);
  if (j.contains("runner_timeout_seconds")) j.at("runner_timeout_seconds").get_to(c.runner_timeout_seconds);
  if (j.contains("prompt_template")) j.at("prompt_template").get_to(c.prompt_template);
  if (j.contains("critic_prompt_template")) j.at("critic_prompt_template").get_to(c.critic_prompt_template);
}

inline RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return j.get<RunConfig>();
}

// Adapts any text backend into a judgment source: renders the critique
// prompt, draws one sample at the configured temperature, and hands the
// text back for judgment extraction.
class BackendCritic : public JudgmentSource {
 public:
  BackendCritic(Backend& backend, std::string prompt_template, double temperature)
      : backend_(backend), template_(std::move(prompt_template)) {
    params_.temperature = temperature;
    params_.k = 1;
  }

  std::string critique(const Query& query, const Response& response) override {
    std::string prompt = template_;
    replace(prompt, "{query}", query.text);
    replace(prompt, "{response}", response.raw_text);
    auto texts = backend_.generate(query.id + "#critique#" + std::to_string(response.sample_index),
                                   prompt, params_);
    return texts.at(0);
  }

 private:
  static void replace(std::string& s, const std::string& from, const std::string& to) {
    for (std::size_t pos = 0; (pos = s.find(from, pos)) != std::string::npos; pos += to.size())
      s.replace(pos, from.size(), to);
  }

  Backend& backend_;
  std::string template_;
  SamplingParams params_;
};

}  // namespace certeval

#endif  // CERTEVAL_RUNCONFIG_HPP_
