#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "rltg/cli.hpp"

using namespace rltg;
namespace fs = std::filesystem;

namespace {

const std::string corpus = std::string(RLTG_DATA_DIR) + "/fixture_corpus.jsonl";
const std::string heldout = std::string(RLTG_DATA_DIR) + "/fixture_heldout.jsonl";

// Shrinks every stage so a full pipeline runs in a few seconds.
const std::vector<std::string> tiny = {"--embed-dim", "16", "--lm-epochs", "1",   "--n-states",   "60",
                                       "--ae-epochs", "1",  "--adv-epochs", "1",  "--adv-hidden", "4",
                                       "--episodes",  "4",  "--steps",      "3",  "--batch",      "4",
                                       "--dqn-hidden", "8", "--topk",       "4",  "--eval-topics", "3",
                                       "--eval-horizon", "5"};

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args, bool shrink = true) {
  args.insert(args.begin(), "rltg");
  if (shrink) args.insert(args.end(), tiny.begin(), tiny.end());
  std::ostringstream out, err;
  const int code = cli::run_subcommand(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("rltg_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

nlohmann::json manifest(const fs::path& dir) { return nlohmann::json::parse(slurp(dir / cli::artifact::manifest)); }

void prerequisites(const fs::path& dir, const std::string& seed) {
  const std::string d = dir.string();
  REQUIRE(run({"train-lm", "--corpus", corpus, "--out-dir", d, "--seed", seed}).code == 0);
  REQUIRE(run({"collect-states", "--corpus", corpus, "--out-dir", d, "--seed", seed}).code == 0);
  REQUIRE(run({"train-ae", "--out-dir", d, "--seed", seed}).code == 0);
  REQUIRE(run({"train-adversary", "--corpus", corpus, "--eval-corpus", heldout, "--out-dir", d, "--seed", seed}).code == 0);
}

}  // namespace

TEST_CASE("help exits cleanly and lists flags") {
  const auto top = run({"--help"}, false);
  CHECK(top.code == 0);
  CHECK(top.out.find("train-agent") != std::string::npos);
  for (const char* sub : {"train-lm", "collect-states", "train-ae", "train-adversary", "train-agent", "generate",
                          "evaluate", "sweep"}) {
    CAPTURE(sub);
    const auto r = run({sub, "--help"}, false);
    CHECK(r.code == 0);
    CHECK(r.out.find("--out-dir") != std::string::npos);
    CHECK(r.out.find("--seed") != std::string::npos);
  }
  CHECK(run({"train-agent", "--help"}, false).out.find("--episodes") != std::string::npos);
  CHECK(run({"sweep", "--help"}, false).out.find("--values") != std::string::npos);
}

TEST_CASE("bad invocations fail with a message") {
  CHECK(run({}, false).code != 0);
  CHECK(run({"train-lm"}, false).code != 0);  // --corpus is required
  const auto bad = run({"sweep", "--corpus", corpus, "--param", "gamma", "--values", "0.5"}, false);
  CHECK(bad.code != 0);
  const fs::path dir = fresh_dir("badcfg");
  {
    std::ofstream cfg(dir / "cfg.json");
    cfg << R"({"no_such_key": 1})";
  }
  const auto r = run({"train-lm", "--corpus", corpus, "--out-dir", dir.string(), "--config", (dir / "cfg.json").string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("no_such_key") != std::string::npos);
}

TEST_CASE("missing prerequisites are named") {
  const fs::path dir = fresh_dir("prereq");
  const auto none = run({"train-ae", "--out-dir", dir.string()});
  CHECK(none.code == 1);
  CHECK(none.err.find("missing prerequisite lm") != std::string::npos);
  CHECK(none.err.find("train-lm") != std::string::npos);

  prerequisites(dir, "3");
  const auto gen = run({"generate", "--out-dir", dir.string(), "--topic", "the market traded"});
  CHECK(gen.code == 1);
  CHECK(gen.err.find("dqn.policy") != std::string::npos);
  const auto greedy = run({"generate", "--out-dir", dir.string(), "--topic", "the market traded", "--method", "greedy"});
  CHECK(greedy.code == 0);
  CHECK(fs::exists(dir / cli::artifact::generated));
}

TEST_CASE("full pipeline writes artifacts and a manifest") {
  const fs::path dir = fresh_dir("pipeline");
  prerequisites(dir, "7");
  const std::string d = dir.string();
  REQUIRE(run({"train-agent", "--corpus", corpus, "--out-dir", d, "--seed", "7"}).code == 0);
  REQUIRE(run({"evaluate", "--eval-corpus", heldout, "--out-dir", d, "--seed", "7"}).code == 0);
  REQUIRE(run({"generate", "--eval-corpus", heldout, "--out-dir", d, "--seed", "7"}).code == 0);
  for (const char* a : {cli::artifact::lm, cli::artifact::vocab, cli::artifact::states, cli::artifact::ae1,
                        cli::artifact::ae2, cli::artifact::adversary, cli::artifact::dqn, cli::artifact::curves,
                        cli::artifact::report_csv, cli::artifact::report_txt, cli::artifact::generated}) {
    CAPTURE(a);
    CHECK(fs::exists(dir / a));
  }
  const auto m = manifest(dir);
  for (const char* sub : {"train-lm", "collect-states", "train-ae", "train-adversary", "train-agent", "evaluate", "generate"}) {
    CAPTURE(sub);
    REQUIRE(m.contains(sub));
    CHECK(m[sub]["seed"] == 7);
    CHECK(m[sub].contains("config"));
    CHECK(m[sub].contains("outputs"));
  }
  CHECK(m["train-agent"]["outputs"][cli::artifact::dqn] == cli::sha256_file((dir / cli::artifact::dqn).string()));
  CHECK(m["train-agent"]["config"]["agent"]["episodes"] == 4);
  CHECK(slurp(dir / cli::artifact::curves).rfind("episode,mean_reward,mean_inv_confidence\n", 0) == 0);
  const std::string report = slurp(dir / cli::artifact::report_csv);
  CHECK(report.find("rltg,") != std::string::npos);
  CHECK(report.find("greedy,") != std::string::npos);
  CHECK(report.find("topk-sample,") != std::string::npos);
}

TEST_CASE("seed precedence: flag, then config file, then environment") {
  const fs::path dir = fresh_dir("seed");
  const std::string d = dir.string();
  {
    std::ofstream cfg(dir / "cfg.json");
    cfg << R"({"seed": 5, "lm_epochs": 1})";
  }
  const std::string cfg = (dir / "cfg.json").string();
  REQUIRE(run({"train-lm", "--corpus", corpus, "--out-dir", d, "--config", cfg}).code == 0);
  CHECK(manifest(dir)["train-lm"]["seed"] == 5);
  REQUIRE(run({"train-lm", "--corpus", corpus, "--out-dir", d, "--config", cfg, "--seed", "9"}).code == 0);
  CHECK(manifest(dir)["train-lm"]["seed"] == 9);
  ::setenv("RLTG_SEED", "13", 1);
  REQUIRE(run({"train-lm", "--corpus", corpus, "--out-dir", d}).code == 0);
  CHECK(manifest(dir)["train-lm"]["seed"] == 13);
  REQUIRE(run({"train-lm", "--corpus", corpus, "--out-dir", d, "--config", cfg}).code == 0);
  CHECK(manifest(dir)["train-lm"]["seed"] == 5);
  ::setenv("RLTG_SEED", "junk", 1);
  CHECK(run({"train-lm", "--corpus", corpus, "--out-dir", d}).code == 1);
  ::unsetenv("RLTG_SEED");
  REQUIRE(run({"train-lm", "--corpus", corpus, "--out-dir", d}).code == 0);
  CHECK(manifest(dir)["train-lm"]["seed"] == 0);
}

TEST_CASE("config file values apply and flags override them") {
  const fs::path dir = fresh_dir("override");
  {
    std::ofstream cfg(dir / "cfg.json");
    cfg << R"({"lm_epochs": 2, "agent": {"gamma": 0.5}, "weights": {"beta": 0.25}})";
  }
  const auto r = run({"train-lm", "--corpus", corpus, "--out-dir", dir.string(), "--config", (dir / "cfg.json").string(),
                      "--lm-epochs", "1"},
                     false);
  REQUIRE(r.code == 0);
  const auto c = manifest(dir)["train-lm"]["config"];
  CHECK(c["lm_epochs"] == 1);
  CHECK(c["agent"]["gamma"] == 0.5);
  CHECK(c["weights"]["beta"] == 0.25);
  CHECK(c["embed_dim"] == 64);
}

TEST_CASE("presets") {
  const auto desk = cli::preset_config("desk");
  CHECK(desk.agent.topk == 10);
  CHECK(desk.agent.horizon == 20);
  CHECK(desk.agent.gamma == 0.9);
  CHECK(desk.agent.adam.lr == 1e-3);
  const auto paper = cli::preset_config("paper");
  CHECK(paper.embed_dim == 768);
  CHECK(paper.ae1_dim + paper.ae2_dim == 384);
  CHECK(paper.agent.topk == 50);
  CHECK(paper.agent.horizon == 50);
  CHECK(paper.eval_horizon == 200);
  CHECK_THROWS_AS(cli::preset_config("huge"), ConfigError);
  cli::RunConfig round;
  round.apply_json(paper.to_json());
  CHECK(round.to_json() == paper.to_json());
}

TEST_CASE("sweep rows follow the requested values and match a base run") {
  const fs::path dir = fresh_dir("sweep");
  prerequisites(dir, "4");
  const std::string d = dir.string();
  REQUIRE(run({"train-agent", "--corpus", corpus, "--out-dir", d, "--seed", "4"}).code == 0);
  REQUIRE(run({"evaluate", "--eval-corpus", heldout, "--out-dir", d, "--seed", "4"}).code == 0);
  const auto report = manifest(dir)["evaluate"]["notes"]["rows"];
  double base = -1.0;
  for (const auto& row : report)
    if (row["method"] == "rltg") base = row["rouge_l"].get<double>();

  REQUIRE(run({"sweep", "--corpus", corpus, "--eval-corpus", heldout, "--out-dir", d, "--seed", "4", "--param", "beta",
               "--values", "0.5"})
              .code == 0);
  auto rows = manifest(dir)["sweep"]["notes"]["rows"];
  REQUIRE(rows.size() == 1);
  CHECK(rows[0]["rouge_l"].get<double>() == base);

  REQUIRE(run({"sweep", "--corpus", corpus, "--eval-corpus", heldout, "--out-dir", d, "--seed", "4", "--param", "lambda",
               "--values", "1,0,0.5"})
              .code == 0);
  std::istringstream csv(slurp(dir / cli::artifact::sweep));
  std::string line;
  std::getline(csv, line);
  CHECK(line == "param,value,rouge_l,status");
  std::vector<std::string> values;
  while (std::getline(csv, line)) {
    CHECK(line.rfind("lambda,", 0) == 0);
    CHECK(line.size() > 3);
    CHECK(line.substr(line.size() - 3) == ",ok");
    values.push_back(line.substr(7, line.find(',', 7) - 7));
  }
  CHECK(values == std::vector<std::string>{"1", "0", "0.5"});
  CHECK(run({"sweep", "--corpus", corpus, "--out-dir", d, "--param", "beta", "--values", "1.5"}).code == 1);
}

TEST_CASE("sha256 of a known file") {
  const fs::path p = fs::temp_directory_path() / "rltg_sha.txt";
  {
    std::ofstream out(p, std::ios::binary);
    out << "abc";
  }
  CHECK(cli::sha256_file(p.string()) == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  fs::remove(p);
  CHECK_THROWS_AS(cli::sha256_file("/nonexistent/file"), IoError);
}
