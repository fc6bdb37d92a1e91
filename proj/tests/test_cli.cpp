#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "test_helpers.hpp"

using namespace certeval;
using namespace certeval::testing;

namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args) {
  const std::string cmd = std::string(CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

struct Workspace {
  fs::path dir;

  Workspace() {
    dir = fs::temp_directory_path() / "certeval_cli_test";
    fs::remove_all(dir);
    fs::create_directories(dir);

    nlohmann::json config{
        {"seed", 123},
        {"backend", "synthetic"},
        {"cache_path", (dir / "cache.jsonl").string()},
        {"synthetic",
         {{"default_outcomes",
           nlohmann::json::array({{{"answer", "1"}, {"probability", 0.7}},
                                  {{"answer", "2"}, {"probability", 0.3}}})},
          {"seed", 123}}},
        {"sampling", {{"default", {{"k", 16}}}}}};
    std::ofstream(dir / "config.json") << config.dump(2);

    std::vector<Query> queries;
    for (int i = 0; i < 6; ++i) {
      Query q;
      q.id = "q" + std::to_string(i);
      q.source_task = TaskKind::math;
      q.text = "what is it";
      q.expected = CanonicalAnswer::numeric(1);
      queries.push_back(q);
    }
    write_jsonl((dir / "queries.jsonl").string(), queries);
  }

  std::string common(const std::string& out) const {
    return "--config " + (dir / "config.json").string() + " --out " + (dir / out).string();
  }
};

}  // namespace

TEST_CASE("the full pipeline runs end to end through the binary") {
  Workspace ws;
  const std::string queries = " --queries " + (ws.dir / "queries.jsonl").string();

  REQUIRE(run_cli("sample " + ws.common("s") + queries) == 0);
  REQUIRE(fs::exists(ws.dir / "s" / "bags.jsonl"));
  REQUIRE(fs::exists(ws.dir / "s" / "manifest.json"));
  auto bags = read_jsonl<AnswerBag>((ws.dir / "s" / "bags.jsonl").string());
  REQUIRE(bags.size() == 6);
  CHECK(bags[0].k == 16);

  REQUIRE(run_cli("grade " + ws.common("g") + " --bags " + (ws.dir / "s" / "bags.jsonl").string() +
                  queries) == 0);
  auto graded = read_jsonl<AnswerBag>((ws.dir / "g" / "graded_bags.jsonl").string());
  for (const auto& bag : graded)
    for (const auto& r : bag.responses) REQUIRE(r.correct.has_value());

  REQUIRE(run_cli("build-bench " + ws.common("b") + " --bags " +
                  (ws.dir / "g" / "graded_bags.jsonl").string() + queries) == 0);
  REQUIRE(fs::exists(ws.dir / "b" / "funnel.csv"));
  auto triplets = read_jsonl<BenchmarkTriplet>((ws.dir / "b" / "triplets.jsonl").string());
  int correct = 0, incorrect = 0;
  for (const auto& t : triplets) (t.gold_judgment == Judgment::correct ? correct : incorrect)++;
  CHECK(correct == incorrect);
  CHECK(correct > 0);

  REQUIRE(run_cli("eval-critic " + ws.common("e") + " --triplets " +
                  (ws.dir / "b" / "triplets.jsonl").string() + " --bags " +
                  (ws.dir / "g" / "graded_bags.jsonl").string()) == 0);
  REQUIRE(fs::exists(ws.dir / "e" / "critic_report.json"));
  REQUIRE(fs::exists(ws.dir / "e" / "heatmap.csv"));
  REQUIRE(fs::exists(ws.dir / "e" / "certainty_bins.csv"));
  nlohmann::json report;
  std::ifstream(ws.dir / "e" / "critic_report.json") >> report;
  CHECK(report.at("judgment_temperature") == 0.6);
  CHECK(report.at("runs_per_model") == 8);

  REQUIRE(run_cli("sc2 " + ws.common("v") + queries) == 0);
  REQUIRE(fs::exists(ws.dir / "v" / "answers.jsonl"));
}

TEST_CASE("a config without a seed is rejected with exit code 2") {
  Workspace ws;
  std::ofstream(ws.dir / "noseed.json") << "{\"backend\": \"synthetic\"}";
  CHECK(run_cli("sample --config " + (ws.dir / "noseed.json").string() + " --out " +
                (ws.dir / "x").string() + " --queries " + (ws.dir / "queries.jsonl").string()) == 2);
  CHECK(run_cli("sample --config " + (ws.dir / "missing.json").string() + " --out " +
                (ws.dir / "x").string() + " --queries " + (ws.dir / "queries.jsonl").string()) == 2);
}

TEST_CASE("replay against an empty cache exits with the replay-miss code") {
  Workspace ws;
  CHECK(run_cli("sample " + ws.common("r") + " --backend replay --queries " +
                (ws.dir / "queries.jsonl").string()) == 3);
}

TEST_CASE("replay after sampling reproduces the recorded bags byte for byte") {
  Workspace ws;
  const std::string queries = " --queries " + (ws.dir / "queries.jsonl").string();
  REQUIRE(run_cli("sample " + ws.common("one") + queries) == 0);
  REQUIRE(run_cli("sample " + ws.common("two") + " --backend replay" + queries) == 0);
  std::ifstream a(ws.dir / "one" / "bags.jsonl"), b(ws.dir / "two" / "bags.jsonl");
  std::string sa((std::istreambuf_iterator<char>(a)), std::istreambuf_iterator<char>());
  std::string sb((std::istreambuf_iterator<char>(b)), std::istreambuf_iterator<char>());
  CHECK(sa == sb);
}
