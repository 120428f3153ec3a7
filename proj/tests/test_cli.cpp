#include "support.hpp"

#include "commands.hpp"

#include "mgproto/csv.hpp"
#include "mgproto/serialization.hpp"

#include <doctest.h>

#include <fstream>
#include <sstream>

using namespace mgproto;
using mgproto::testing::scratch_dir;
namespace fs = std::filesystem;

namespace {

struct Result
{
  int code;
  std::string out;
  std::string err;
};

Result invoke(std::vector<std::string> args)
{
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p)
{
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string put(const fs::path& p, const std::string& text)
{
  std::ofstream(p, std::ios::binary) << text;
  return p.string();
}

/// Two well separated leaves under one root plus a third further away.
const char* blob_tree = "left\tL\nright\tL\nfar\troot\nL\troot\n";

std::string blob_csv(int per_class)
{
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 0.3);
  std::string s = "x0,x1,label\n";
  const char* names[] = {"left", "right", "far"};
  const double cx[] = {-3, 3, 0};
  const double cy[] = {0, 0, 5};
  for (int i = 0; i < per_class * 3; ++i) {
    const int c = i % 3;
    s += csv::format_number(cx[c] + n(rng)) + "," + csv::format_number(cy[c] + n(rng)) + "," + names[c] + "\n";
  }
  return s;
}

} // namespace

TEST_CASE("usage and help")
{
  CHECK(invoke({"--help"}).code == cli::exit_ok);
  CHECK(invoke({}).code == cli::exit_usage);
  CHECK(invoke({"frobnicate"}).code == cli::exit_usage);
  CHECK(invoke({"cost"}).code == cli::exit_usage);
}

TEST_CASE("cost command")
{
  const auto dir = scratch_dir("cli_cost");
  const auto tree = put(dir / "t.tsv", mgproto::testing::toy_edges);
  const Result r = invoke({"cost", tree});
  REQUIRE(r.code == 0);
  CHECK(r.out == ",a1,a2,b1\na1,0,2,4\na2,2,0,4\nb1,4,4,0\n");

  REQUIRE(invoke({"cost", tree, "--nodes", "all", "--out", (dir / "all.csv").string()}).code == 0);
  const csv::Table all = csv::read_file((dir / "all.csv").string());
  CHECK(all.rows.size() == 6);
  CHECK(all.header.size() == 7);

  CHECK(invoke({"cost", put(dir / "cycle.tsv", "root\tA\nA\troot\n")}).code == cli::exit_usage);
  CHECK(invoke({"cost", (dir / "missing.tsv").string()}).code == cli::exit_usage);
  CHECK(invoke({"cost", tree, "--nodes", "some"}).code == cli::exit_usage);
}

TEST_CASE("embed command")
{
  const auto dir = scratch_dir("cli_embed");
  const auto chain = put(dir / "chain.tsv", "a\tb\nc\tb\n");
  REQUIRE(invoke({"embed", chain, "--dim", "2", "--out", (dir / "e.json").string(), "--csv", (dir / "e.csv").string()}).code == 0);
  const Json j = read_json_file((dir / "e.json").string());
  CHECK(j["report"]["scale_free_distortion"].get<double>() < 1e-6);
  CHECK(j["prototypes"]["rows"] == 2);
  CHECK(fs::exists(dir / "e.csv"));

  const auto star = put(dir / "star.tsv", "a\tr\nb\tr\nc\tr\nd\tr\n");
  REQUIRE(invoke({"embed", star, "--dim", "1", "--seed", "3", "--out", (dir / "s1.json").string()}).code == 0);
  CHECK(read_json_file((dir / "s1.json").string())["report"]["scale_free_distortion"].get<double>() > 1e-3);
  REQUIRE(invoke({"embed", star, "--dim", "1", "--seed", "3", "--out", (dir / "s2.json").string()}).code == 0);
  CHECK(slurp(dir / "s1.json") == slurp(dir / "s2.json"));

  REQUIRE(invoke({"embed", star, "--regularizer", "rank", "--steps", "200", "--out", (dir / "r.json").string()}).code == 0);
  CHECK(invoke({"embed", star, "--regularizer", "none"}).code == cli::exit_usage);
  CHECK(invoke({"embed", star, "--distance", "cosine"}).code == cli::exit_usage);
}

TEST_CASE("synth, train, eval and infer")
{
  const auto dir = scratch_dir("cli_pipeline");
  const auto tree_path = put(dir / "tree.tsv", mgproto::testing::toy_edges);
  const auto data_path = (dir / "d.csv").string();
  REQUIRE(invoke({"synth", tree_path, "--per-class", "30", "--dims", "3", "--seed", "5", "--out", data_path}).code == 0);
  CHECK(csv::read_file(data_path).rows.size() == 90);
  CHECK(read_json_file(data_path + ".json")["dims"] == 3);

  put(dir / "run.json", R"({"taxonomy": "tree.tsv", "dataset": {"csv": "d.csv"}, "seeds": [1, 2],
      "train": {"epochs": 3, "embedding_dim": 2, "model": {"hidden": [8]}}})");
  const Result r = invoke({"train", (dir / "run.json").string(), "--out-dir", (dir / "out").string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  for (const char* seed : {"seed_1", "seed_2"})
    for (const char* f : {"checkpoint.json", "history.csv", "history.json", "report.json", "confusion.csv",
                          "prototypes.csv", "embeddings.csv"})
      CHECK(fs::exists(dir / "out" / seed / f));
  const Json agg = read_json_file((dir / "out" / "aggregate.json").string());
  CHECK(agg["per_seed"].size() == 2);
  CHECK(agg["aggregation"] == "median");
  const Json echo = read_json_file((dir / "out" / "config.json").string());
  CHECK(echo["output_dir"] == (dir / "out").string());
  CHECK(echo["train"]["epochs"] == 3);
  CHECK(cli::to_json(cli::run_config_from_json(echo)) == echo);
  const csv::Table hist = csv::read_file((dir / "out" / "seed_1" / "history.csv").string());
  CHECK(hist.header == std::vector<std::string>{"epoch", "l_data", "l_reg", "total", "s_star", "train_er", "train_ac"});
  CHECK(hist.rows.size() == 3);

  // Identical inputs give byte-identical outputs.
  REQUIRE(invoke({"train", (dir / "run.json").string(), "--out-dir", (dir / "again").string(), "--seeds", "1"}).code == 0);
  CHECK(slurp(dir / "out" / "seed_1" / "checkpoint.json") == slurp(dir / "again" / "seed_1" / "checkpoint.json"));
  CHECK(slurp(dir / "out" / "seed_1" / "report.json") == slurp(dir / "again" / "seed_1" / "report.json"));
  CHECK_FALSE(fs::exists(dir / "again" / "seed_2"));

  const auto ckpt = (dir / "out" / "seed_1" / "checkpoint.json").string();
  for (const char* scheme : {"max-prob", "min-ec", "any-node"}) {
    const auto out = dir / (std::string("eval_") + scheme);
    REQUIRE(invoke({"eval", ckpt, data_path, tree_path, "--scheme", scheme, "--out-dir", out.string()}).code == 0);
    const Json rep = read_json_file((out / "report.json").string());
    CHECK(rep["n"] == 90);
    CHECK(rep["l_er"].is_null() == (std::string(scheme) != "any-node"));
    CHECK(fs::exists(out / "confusion.csv"));
  }
  CHECK(invoke({"eval", (dir / "nope.json").string(), data_path, tree_path}).code == cli::exit_usage);
  CHECK(invoke({"eval", ckpt, data_path, tree_path, "--scheme", "vote"}).code == cli::exit_usage);

  const auto one = put(dir / "one.csv", "x0,x1,x2\n0.1,0.2,0.3\n");
  const Result single = invoke({"infer", ckpt, one});
  REQUIRE(single.code == 0);
  CHECK(std::count(single.out.begin(), single.out.end(), '\n') == 2);
  CHECK(invoke({"infer", ckpt, put(dir / "wide.csv", "a,b\n1,2\n")}).code == cli::exit_usage);

  const Result kd = invoke({"infer", ckpt, data_path, "--label-column", "label"});
  const Result scan = invoke({"infer", ckpt, data_path, "--label-column", "label", "--exhaustive"});
  REQUIRE(kd.code == 0);
  CHECK(kd.out == scan.out);
  CHECK(kd.out == invoke({"infer", ckpt, data_path, "--label-column", "label"}).out);
  CHECK(kd.out.rfind("sample_id,scheme,predicted,top1_class,top1_prob", 0) == 0);
}

TEST_CASE("synthetic dataset inside the run config")
{
  const auto dir = scratch_dir("cli_synth_config");
  put(dir / "tree.tsv", mgproto::testing::toy_edges);
  put(dir / "run.json", R"({"taxonomy": "tree.tsv", "dataset": {"synthetic": {"per_class": 20, "seed": 2}},
      "output_dir": "results", "aggregation": "mean", "train": {"epochs": 2, "embedding_dim": 2, "model": {"hidden": [4]}}})");
  REQUIRE(invoke({"train", (dir / "run.json").string()}).code == 0);
  CHECK(fs::exists(dir / "results" / "seed_0" / "checkpoint.json"));
  CHECK(read_json_file((dir / "results" / "aggregate.json").string())["aggregation"] == "mean");

  put(dir / "bad.json", R"({"taxonomy": "missing.tsv", "dataset": {"csv": "d.csv"}})");
  CHECK(invoke({"train", (dir / "bad.json").string()}).code == cli::exit_usage);
  put(dir / "bad2.json", R"({"taxonomy": "tree.tsv", "dataset": {"synthetic": {}}, "train": {"lambda": -2}})");
  CHECK(invoke({"train", (dir / "bad2.json").string()}).code == cli::exit_usage);
}

TEST_CASE("memorized training set and the uniform-metric identity")
{
  const auto dir = scratch_dir("cli_memorize");
  const auto tree = put(dir / "tree.tsv", blob_tree);
  const auto data = put(dir / "d.csv", blob_csv(20));
  put(dir / "run.json", R"({"taxonomy": "tree.tsv", "dataset": {"csv": "d.csv"}, "test_fraction": 0.25,
      "train": {"epochs": 60, "embedding_dim": 2, "batch_size": 8, "model": {"hidden": [8]}, "optimizer": {"lr": 0.01}}})");
  REQUIRE(invoke({"train", (dir / "run.json").string(), "--out-dir", (dir / "out").string()}).code == 0);
  const auto ckpt = (dir / "out" / "seed_0" / "checkpoint.json").string();
  REQUIRE(invoke({"eval", ckpt, data, tree, "--out-dir", (dir / "e").string()}).code == 0);
  CHECK(read_json_file((dir / "e" / "report.json").string())["er"] == 0.0);

  // With all leaves under the root every error costs the same.
  const auto flat = put(dir / "flat.tsv", "left\troot\nright\troot\nfar\troot\n");
  REQUIRE(invoke({"eval", ckpt, data, flat, "--scheme", "max-prob", "--out-dir", (dir / "mp").string()}).code == 0);
  REQUIRE(invoke({"eval", ckpt, data, flat, "--scheme", "min-ec", "--out-dir", (dir / "ec").string()}).code == 0);
  CHECK(slurp(dir / "mp" / "report.json") == slurp(dir / "ec" / "report.json"));
}
