#include <doctest.h>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const fs::path& workdir() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / "assay_cli_test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string path(const std::string& name) { return (workdir() / name).string(); }

// Exit status of the CLI with the given arguments; stdout and stderr go to
// files next to the inputs.
int assay(const std::string& args) {
  const std::string cmd = std::string(ASSAY_CLI_PATH) + " " + args + " >" + path("stdout.txt") + " 2>" +
                          path("stderr.txt");
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const std::string& file) {
  std::ifstream in(file);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("usage errors exit 2") {
  CHECK(assay("") == 2);
  CHECK(assay("bogus") == 2);
  CHECK(assay("run --pool nowhere.jsonl") == 2);
  CHECK(assay("synth --classes 3 --n 10") == 2);
  CHECK(assay("--help") == 0);
}

TEST_CASE("malformed input exits 1 with the line") {
  std::ofstream(path("bad.jsonl")) << "{\"id\": \"a\", \"scores\": [0.5, 0.5]}\n{\"id\": \"b\", \"scores\": [0.5, 0.7]}\n";
  CHECK(assay("ingest --in " + path("bad.jsonl")) == 1);
  CHECK(slurp(path("stderr.txt")).find("line 2") != std::string::npos);

  std::ofstream(path("ok.csv")) << "id,score_0,score_1\nq,0.2,0.8\n";
  CHECK(assay("ingest --in " + path("ok.csv") + " --out " + path("ok.jsonl")) == 0);
  CHECK(json::parse(slurp(path("ok.jsonl"))).at("id") == "q");
}

TEST_CASE("synth, run, eval and report") {
  REQUIRE(assay("synth --classes 5 --n 2000 --profile-range 0.4,0.95 --seed 3 --out " + path("pool.jsonl")) == 0);
  std::ofstream(path("ts.json")) << R"({"prior": {"kind": "uniform"}, "budget": 300, "seed": 1, "runs": 4})";
  std::ofstream(path("rnd.json")) << R"({"prior": {"kind": "uniform"}, "strategy": {"kind": "random"},
                                         "budget": 300, "seed": 1, "runs": 4})";
  REQUIRE(assay("run --config " + path("ts.json") + " --pool " + path("pool.jsonl") + " --out " + path("ts.jsonl") +
                " --jobs 2") == 0);
  REQUIRE(assay("run --config " + path("rnd.json") + " --pool " + path("pool.jsonl") + " --out " +
                path("rnd.jsonl")) == 0);
  CHECK(fs::exists(path("ts.jsonl.meta.json")));
  const auto meta = json::parse(slurp(path("ts.jsonl.meta.json")));
  CHECK(meta.at("runs").size() == 4);

  // the same seed gives the same file
  REQUIRE(assay("run --config " + path("ts.json") + " --pool " + path("pool.jsonl") + " --out " +
                path("ts2.jsonl")) == 0);
  CHECK(slurp(path("ts.jsonl")) == slurp(path("ts2.jsonl")));

  REQUIRE(assay("eval --truth-from " + path("pool.jsonl") + " --traj " + path("ts.jsonl") + " --traj " +
                path("rnd.jsonl") + " --name ts --name random --out " + path("eval.json")) == 0);
  const auto ev = json::parse(slurp(path("eval.json")));
  REQUIRE(ev.at("methods").size() == 2);
  CHECK(ev["methods"][1]["name"] == "random");
  CHECK(ev["methods"][1]["metrics"]["mrr"].contains("significant_vs"));
  CHECK(ev["truth"]["true_top"] == json::array({0}));

  REQUIRE(assay("report --pool " + path("pool.jsonl") + " --traj " + path("ts.jsonl") + " --run 2 --samples 500 --out " +
                path("report.json")) == 0);
  const auto rep = json::parse(slurp(path("report.json")));
  CHECK(rep.at("labels") == 300);
  CHECK(rep.at("groups").size() == 5);
  CHECK(assay("report --pool " + path("pool.jsonl") + " --traj " + path("ts.jsonl") + " --run 9") == 1);
}

TEST_CASE("overrides and invalid configs") {
  REQUIRE(assay("synth --classes 3 --n 300 --profile 0.5,0.7,0.9 --seed 1 --out " + path("small.jsonl")) == 0);
  std::ofstream(path("cfg.json")) << R"({"budget": 10})";
  REQUIRE(assay("run --config " + path("cfg.json") + " --pool " + path("small.jsonl") + " --out " + path("o.jsonl") +
                " --budget 25 --runs 2 --strategy random") == 0);
  const auto meta = json::parse(slurp(path("o.jsonl.meta.json")));
  CHECK(meta["config"]["budget"] == 25);
  CHECK(meta["config"]["strategy"]["kind"] == "random");
  CHECK(meta["runs"][1]["steps"] == 25);

  std::ofstream(path("mp.json")) << R"({"strategy": {"kind": "multiple-play-thompson", "m": 4}})";
  CHECK(assay("run --config " + path("mp.json") + " --pool " + path("small.jsonl") + " --out " + path("x.jsonl")) == 1);
  CHECK(assay("run --config " + path("cfg.json") + " --pool " + path("small.jsonl") + " --out " + path("x.jsonl") +
              " --strategy greedy") == 1);
}
