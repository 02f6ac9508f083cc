#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include <unistd.h>

#include "doctest.h"
#include "lace/cli.hpp"
#include "lace/docred.hpp"
#include "lace/evaluation.hpp"
#include "lace/synthetic.hpp"
#include "test_util.hpp"

using namespace lace;
using lace::testing::corpus_from_label_sets;
namespace fs = std::filesystem;

namespace {

struct Run {
  int rc;
  std::string out, err;
};

Run run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int rc = run_cli(args, out, err);
  return {rc, out.str(), err.str()};
}

// Fresh scratch directory per test case.
struct Scratch {
  fs::path dir;
  explicit Scratch(const std::string& name) {
    dir = fs::temp_directory_path() / ("lace_cli_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  std::string path(const std::string& file) const { return (dir / file).string(); }
  std::string write(const std::string& file, const std::string& text) const {
    std::ofstream(dir / file, std::ios::binary) << text;
    return path(file);
  }
  std::string write(const std::string& file, const Corpus& c) const {
    return write(file, serialize_corpus(c));
  }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string field(const std::string& text, const std::string& key) {
  const auto at = text.find(key + ": ");
  REQUIRE(at != std::string::npos);
  const auto start = at + key.size() + 2;
  return text.substr(start, text.find('\n', start) - start);
}

// Directed off-diagonal edges straight from the label sets.
std::size_t brute_force_edges(const std::vector<std::set<std::string>>& sets, long tau, double delta) {
  std::set<std::string> codes;
  for (const auto& s : sets) codes.insert(s.begin(), s.end());
  std::map<std::pair<std::string, std::string>, long> c;
  for (const auto& s : sets)
    for (const auto& a : s)
      for (const auto& b : s)
        if (a != b) ++c[{a, b}];
  std::size_t edges = 0;
  for (const auto& i : codes) {
    long row = 0;
    for (const auto& j : codes)
      if (i != j) row += c[{i, j}];
    for (const auto& j : codes) {
      if (i == j || row == 0 || c[{i, j}] < tau) continue;
      if (double(c[{i, j}]) / double(row) >= delta) ++edges;
    }
  }
  return edges;
}

Corpus tiny_synthetic(std::uint64_t seed) {
  SyntheticConfig sc;
  sc.documents = 6;
  sc.relations = 3;
  sc.vocab_size = 30;
  sc.distractors = 1;
  sc.seed = seed;
  return generate_synthetic(sc);
}

const std::vector<std::string> kTiny = {"--desk-scale", "--word-dim", "6",     "--hidden-dim", "4",
                                        "--relation-dim", "8",         "--head-dim", "4", "--quiet"};

std::vector<std::string> cat(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

TEST_CASE("help and usage errors") {
  const Run help = run({"--help"});
  CHECK(help.rc == kExitOk);
  for (const char* sub : {"build-graph", "stats", "train", "predict", "eval", "ablate", "gradcheck"})
    CHECK(help.out.find(sub) != std::string::npos);

  const Run bg = run({"build-graph", "--help"});
  CHECK(bg.rc == kExitOk);
  CHECK(bg.out.find("[0.05]") != std::string::npos);
  CHECK(bg.out.find("[10]") != std::string::npos);
  CHECK(run({"train", "--help"}).out.find("--lr-head FLOAT [0.001]") != std::string::npos);

  CHECK(run({}).rc == kExitUsage);
  CHECK(run({"frobnicate"}).rc == kExitUsage);
  CHECK(run({"build-graph"}).rc == kExitUsage);
  CHECK(run({"build-graph", "--train", "no-such-file.json", "--out", "x.json"}).rc == kExitUsage);
}

TEST_CASE("exit codes for bad parameters and bad inputs") {
  Scratch s("exit");
  const std::string corpus = s.write("train.json", corpus_from_label_sets({{"A", "B"}}));
  const std::string out = s.path("g.json");
  CHECK(run({"build-graph", "--train", corpus, "--out", out, "--delta", "2"}).rc == kExitUsage);
  CHECK(run({"build-graph", "--train", corpus, "--out", out, "--p", "1"}).rc == kExitUsage);
  CHECK(run({"build-graph", "--train", corpus, "--out", out, "--tau", "-1"}).rc == kExitUsage);
  CHECK(run({"build-graph", "--train", corpus, "--out", out, "--tau", "abc"}).rc == kExitUsage);
  CHECK(run({"build-graph", "--train", corpus, "--out", out, "--format", "xml"}).rc == kExitUsage);
  CHECK_FALSE(fs::exists(out));

  const std::string broken = s.write("broken.json", "[{\"title\": \"x\", \"sents\": ");
  const Run bad = run({"build-graph", "--train", broken, "--out", out});
  CHECK(bad.rc == kExitRuntime);
  CHECK(bad.err.find("error:") == 0);

  CHECK(run({"synth", "--out", s.path("c.json"), "--relations", "0"}).rc == kExitUsage);
  CHECK(run({"ablate", "--train", corpus, "--eval", corpus, "--switch", "nope"}).rc == kExitUsage);
  CHECK(run({"stats", "--train", corpus, "--top-k", "-3"}).rc == kExitUsage);
}

TEST_CASE("build-graph edge counts match a brute-force oracle") {
  Scratch s("graph");
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<int> n_docs(1, 12), n_labels(1, 4), code(0, 5), tau(0, 3);
  std::uniform_real_distribution<double> delta(0.01, 0.6);
  for (int trial = 0; trial < 25; ++trial) {
    std::vector<std::set<std::string>> sets(n_docs(rng));
    for (auto& set : sets) {
      const int k = n_labels(rng);
      while (static_cast<int>(set.size()) < k) set.insert("R" + std::to_string(code(rng)));
    }
    const std::string corpus = s.write("t.json", corpus_from_label_sets(sets));
    const long t = tau(rng);
    const double d = delta(rng);
    char dbuf[32];
    std::snprintf(dbuf, sizeof dbuf, "%.17g", d);
    const Run r = run({"build-graph", "--train", corpus, "--out", s.path("g.json"), "--tau",
                       std::to_string(t), "--delta", dbuf});
    REQUIRE(r.rc == kExitOk);
    CHECK(std::stoul(field(r.out, "edges")) == brute_force_edges(sets, t, d));
  }

  const std::string corpus = s.write("t.json", corpus_from_label_sets({{"A", "B"}, {"A", "C"}}));
  const Run huge = run({"build-graph", "--train", corpus, "--out", s.path("g.json"), "--tau", "1000000"});
  CHECK(huge.rc == kExitOk);
  CHECK(field(huge.out, "edges") == "0");
  CHECK(field(huge.out, "relations") == "3");
}

TEST_CASE("build-graph output formats") {
  Scratch s("formats");
  const std::string corpus = s.write("t.json", corpus_from_label_sets({{"A", "B"}, {"A", "B"}}));
  REQUIRE(run({"build-graph", "--train", corpus, "--out", s.path("g.tsv"), "--format", "tsv", "--tau",
               "0", "--dot", s.path("g.dot")})
              .rc == kExitOk);
  const std::string tsv = slurp(s.path("g.tsv"));
  CHECK(tsv.find("A\tB") != std::string::npos);
  const std::string dot = slurp(s.path("g.dot"));
  CHECK(dot.find("digraph") != std::string::npos);
  CHECK(dot.find("\"A\" -> \"B\"") != std::string::npos);
}

TEST_CASE("stats") {
  Scratch s("stats");
  const std::string corpus = s.write("t.json", corpus_from_label_sets({{"a"}, {"a", "b"}}));
  const Run r = run({"stats", "--train", corpus});
  REQUIRE(r.rc == kExitOk);
  CHECK(field(r.out, "multi-label fraction") == "0.5000");
  CHECK(field(r.out, "max label-set size") == "2");
  CHECK(field(r.out, "labeled pairs") == "2");
  CHECK(field(r.out, "no pairs") == "false");
  // One co-occurring pair: both rows of the conditional matrix put all mass on the other label.
  CHECK(r.out.find("P(b | a) = 1.000\tP(a | b) = 1.000") != std::string::npos);

  const Run empty = run({"stats", "--train", s.write("e.json", "[]")});
  REQUIRE(empty.rc == kExitOk);
  CHECK(field(empty.out, "no pairs") == "true");
  CHECK(field(empty.out, "documents") == "0");
}

TEST_CASE("eval against gold") {
  Scratch s("eval");
  const Corpus gold = corpus_from_label_sets({{"A", "B"}, {"A"}});
  const std::string gold_path = s.write("gold.json", gold);
  std::vector<PredictedFact> perfect;
  for (const auto& d : gold.documents)
    for (const auto& f : d.facts) perfect.push_back({d.title, f.head, f.tail, f.relation, 1.0});
  write_predictions(perfect, s.path("pred.json"));
  const Run r = run({"eval", "--pred", s.path("pred.json"), "--gold", gold_path});
  REQUIRE(r.rc == kExitOk);
  CHECK(field(r.out, "f1") == "1.0000");
  CHECK(field(r.out, "2-rel").find("f1 1.0000") != std::string::npos);
  CHECK(field(r.out, "3-rel") == "absent");
  CHECK(r.out.find("ign_f1") == std::string::npos);

  const Run ign = run({"eval", "--pred", s.path("pred.json"), "--gold", gold_path, "--train", gold_path});
  CHECK(field(ign.out, "ign_f1") == "0.0000");

  write_predictions({{"unknown title", 0, 1, "A", 1.0}}, s.path("bad.json"));
  CHECK(run({"eval", "--pred", s.path("bad.json"), "--gold", gold_path}).rc == kExitRuntime);
}

TEST_CASE("train, predict and eval end to end are reproducible") {
  Scratch s("e2e");
  const std::string train_path = s.write("train.json", tiny_synthetic(1));
  const std::string dev_path = s.write("dev.json", tiny_synthetic(2));
  REQUIRE(run({"build-graph", "--train", train_path, "--out", s.path("g.json"), "--tau", "0"}).rc == kExitOk);

  auto train_to = [&](const std::string& ckpt) {
    return run(cat({"train", "--train", train_path, "--graph", s.path("g.json"), "--out", s.path(ckpt),
                    "--epochs", "2", "--trace", s.path(ckpt + ".csv")},
                   kTiny));
  };
  const Run t1 = train_to("a.ckpt");
  REQUIRE(t1.rc == kExitOk);
  CHECK(t1.out.find("checkpoint: ") != std::string::npos);
  REQUIRE(train_to("b.ckpt").rc == kExitOk);
  CHECK(slurp(s.path("a.ckpt")) == slurp(s.path("b.ckpt")));
  CHECK(slurp(s.path("a.ckpt.csv")) == slurp(s.path("b.ckpt.csv")));

  for (const char* ckpt : {"a.ckpt", "b.ckpt"}) {
    REQUIRE(run({"predict", "--checkpoint", s.path(ckpt), "--graph", s.path("g.json"), "--input", dev_path,
                 "--out", s.path(std::string(ckpt) + ".pred.json")})
                .rc == kExitOk);
  }
  CHECK(slurp(s.path("a.ckpt.pred.json")) == slurp(s.path("b.ckpt.pred.json")));
  const Run ev = run({"eval", "--pred", s.path("a.ckpt.pred.json"), "--gold", dev_path});
  CHECK(ev.rc == kExitOk);

  const Run sweep = run({"predict", "--checkpoint", s.path("a.ckpt"), "--graph", s.path("g.json"), "--input",
                         dev_path, "--theta-sweep", "0:1:0.5"});
  CHECK(sweep.rc == kExitOk);
  CHECK(std::count(sweep.out.begin(), sweep.out.end(), '\n') == 4);
  CHECK(run({"predict", "--checkpoint", s.path("a.ckpt"), "--graph", s.path("g.json"), "--input", dev_path,
             "--theta-sweep", "1:0:0.5"})
            .rc == kExitUsage);
  CHECK(run({"predict", "--checkpoint", s.path("a.ckpt"), "--graph", s.path("g.json"), "--input", dev_path,
             "--theta-sweep", "banana"})
            .rc == kExitUsage);
  CHECK(run({"predict", "--checkpoint", s.path("a.ckpt"), "--graph", s.path("g.json"), "--input", dev_path})
            .rc == kExitUsage);

  // A graph built with other parameters does not match the checkpoint.
  REQUIRE(run({"build-graph", "--train", train_path, "--out", s.path("g2.json"), "--tau", "0", "--p", "0.5"})
              .rc == kExitOk);
  CHECK(run({"predict", "--checkpoint", s.path("a.ckpt"), "--graph", s.path("g2.json"), "--input", dev_path,
             "--out", s.path("x.json")})
            .rc == kExitRuntime);

  // Flags that contradict the graph file are rejected.
  CHECK(run(cat({"train", "--train", train_path, "--graph", s.path("g.json"), "--out", s.path("c.ckpt"),
                 "--tau", "5"},
                kTiny))
            .rc == kExitUsage);
}

TEST_CASE("config file with flag overrides") {
  Scratch s("config");
  const std::string train_path = s.write("train.json", tiny_synthetic(3));
  REQUIRE(run({"build-graph", "--train", train_path, "--out", s.path("g.json"), "--tau", "0"}).rc == kExitOk);
  const std::string cfg = s.write("cfg.json", "{\"epochs\": 1, \"word_dim\": 6, \"hidden_dim\": 4, "
                                              "\"relation_dim\": 8, \"head_dim\": 4, \"type_dim\": 2}");
  const Run from_file = run({"train", "--train", train_path, "--graph", s.path("g.json"), "--out",
                             s.path("a.ckpt"), "--config", cfg});
  REQUIRE(from_file.rc == kExitOk);
  CHECK(from_file.out.find("epoch 1/1") != std::string::npos);

  const Run overridden = run({"train", "--train", train_path, "--graph", s.path("g.json"), "--out",
                              s.path("b.ckpt"), "--config", cfg, "--epochs", "2"});
  REQUIRE(overridden.rc == kExitOk);
  CHECK(overridden.out.find("epoch 2/2") != std::string::npos);

  const std::string bad = s.write("bad.json", "{\"epochs\": \"many\"}");
  CHECK(run({"train", "--train", train_path, "--graph", s.path("g.json"), "--out", s.path("c.ckpt"),
             "--config", bad})
            .rc == kExitUsage);
  const std::string unknown = s.write("unknown.json", "{\"epoch\": 3}");
  CHECK(run({"train", "--train", train_path, "--graph", s.path("g.json"), "--out", s.path("c.ckpt"),
             "--config", unknown})
            .rc == kExitUsage);
}

TEST_CASE("relative inputs fall back to LACE_DATA_DIR") {
  Scratch s("datadir");
  s.write("rel.json", corpus_from_label_sets({{"A", "B"}}));
  const std::string name = "lace_cli_rel_" + std::to_string(::getpid()) + ".json";
  fs::copy_file(s.path("rel.json"), s.path(name));
  ::unsetenv("LACE_DATA_DIR");
  CHECK(run({"stats", "--train", name}).rc == kExitUsage);
  ::setenv("LACE_DATA_DIR", s.dir.c_str(), 1);
  const Run r = run({"stats", "--train", name});
  CHECK(r.rc == kExitOk);
  CHECK(field(r.out, "labeled pairs") == "1");
  ::unsetenv("LACE_DATA_DIR");
}

TEST_CASE("synth is deterministic") {
  Scratch s("synth");
  REQUIRE(run({"synth", "--out", s.path("a.json"), "--documents", "5", "--seed", "4"}).rc == kExitOk);
  REQUIRE(run({"synth", "--out", s.path("b.json"), "--documents", "5", "--seed", "4"}).rc == kExitOk);
  CHECK(slurp(s.path("a.json")) == slurp(s.path("b.json")));
  CHECK(parse_corpus(s.path("a.json")).documents.size() == 5);
}
