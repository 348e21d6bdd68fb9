// tests/unit/test_cli.cpp

// Copyright 2026 The docws Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include <sstream>

#include <doctest.h>

#include "cli.hpp"
#include "test_util.hpp"

using namespace docws;
using namespace docws::testing;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code = 0;
  std::string out, err;
};

Result Cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  int code = cli::Run(args, out, err);
  return {code, out.str(), err.str()};
}

const char *kCorpus =
    R"({"classes": ["A", "B"]}
{"doc_id": "d1", "width": 1000, "height": 1000, "tokens": [{"text": "alpha", "bbox": [10, 10, 90, 30], "label": "A"}, {"text": "beta", "bbox": [110, 10, 190, 30], "label": "B"}, {"text": "both", "bbox": [210, 10, 290, 30], "label": "B"}]}
)";

const char *kSuite = R"([
  {"id": "lf1", "class": "A", "rule": {"type": "keyword", "lexicon": ["alpha", "both"]}},
  {"id": "lf2", "class": "B", "rule": {"type": "keyword", "lexicon": ["both"]}},
  {"id": "lf3", "class": "B", "rule": {"type": "keyword", "lexicon": ["never"]}}
])";

std::string Slurp(const fs::path &p) { return ReadFile(p); }

// Generated corpus big enough to train on, shared across cases.
const fs::path &SynthDir() {
  static fs::path dir = [] {
    fs::path d = TempDir("cli_synth");
    WriteFileAtomic(d / "spec.txt", "n_documents = 40\n");
    Result r = Cli({"--quiet", "synth", "--spec", (d / "spec.txt").string(), "-o", (d / "s").string()});
    REQUIRE(r.code == 0);
    WriteFileAtomic(d / "train.txt", "max_epochs = 2\nhash_bits = 10\n");
    return d;
  }();
  return dir;
}

}  // namespace

TEST_CASE("ingest summary and error codes") {
  fs::path d = TempDir("cli_ingest");
  WriteFileAtomic(d / "c.jsonl", kCorpus);
  Result r = Cli({"ingest", (d / "c.jsonl").string(), "-o", (d / "n.jsonl").string()});
  CHECK(r.code == 0);
  CHECK(r.out == "1 docs, 3 tokens, 2 classes\n");
  CHECK(ParseDocuments(Slurp(d / "n.jsonl")).documents.size() == 1);

  CHECK(Cli({"ingest", (d / "missing.jsonl").string()}).code == cli::kExitIo);
  WriteFileAtomic(d / "bad.jsonl",
                  "{\"classes\": [\"A\"]}\n{\"doc_id\": \"x\", \"width\": 10, \"height\": 10, \"tokens\": "
                  "[{\"text\": \"t\", \"bbox\": [0, 0, 20, 5]}]}\n");
  Result bad = Cli({"ingest", (d / "bad.jsonl").string(), "-o", (d / "bad_out.jsonl").string()});
  CHECK(bad.code == cli::kExitValidation);
  CHECK(bad.err.find("line 2") != std::string::npos);
  CHECK_FALSE(fs::exists(d / "bad_out.jsonl"));
  CHECK(Cli({"no-such-command"}).code == cli::kExitValidation);
}

TEST_CASE("lf-apply and lf-report") {
  fs::path d = TempDir("cli_lf");
  WriteFileAtomic(d / "c.jsonl", kCorpus);
  WriteFileAtomic(d / "s.json", kSuite);
  Result r = Cli({"lf-apply", (d / "c.jsonl").string(), (d / "s.json").string(), "-o",
                  (d / "m.txt").string()});
  REQUIRE(r.code == 0);
  std::istringstream in(Slurp(d / "m.txt"));
  LabelMatrix m = ReadLabelMatrix(in);
  CHECK(m.n_instances == 3);
  CHECK(m.n_lfs == 3);
  CHECK(m.entries == std::vector<ClassId>{1, 0, 0, 0, 0, 0, 1, 2, 0});
  const std::string first = Slurp(d / "m.txt");
  REQUIRE(Cli({"lf-apply", (d / "c.jsonl").string(), (d / "s.json").string(), "-o",
               (d / "m.txt").string()}).code == 0);
  CHECK(Slurp(d / "m.txt") == first);

  Result rep = Cli({"lf-report", (d / "m.txt").string()});
  CHECK(rep.code == 0);
  CHECK(rep.out.find("overlap   0.333") != std::string::npos);
  CHECK(rep.out.find("conflict  0.333") != std::string::npos);
  CHECK(rep.out.find(" -") != std::string::npos);
  CHECK(rep.err.find("warning: LF 'lf3' never fires") != std::string::npos);

  Result gold = Cli({"lf-report", (d / "m.txt").string(), "--corpus", (d / "c.jsonl").string()});
  CHECK(gold.code == 0);
  CHECK(gold.out.find("0.500") != std::string::npos);

  WriteFileAtomic(d / "empty.json", "[]");
  Result empty = Cli({"lf-apply", (d / "c.jsonl").string(), (d / "empty.json").string(), "-o",
                      (d / "e.txt").string()});
  CHECK(empty.code == cli::kExitValidation);
  CHECK(empty.err.find("no labeling functions") != std::string::npos);
  CHECK_FALSE(fs::exists(d / "e.txt"));
}

TEST_CASE("eval on identical gold and prediction") {
  fs::path d = TempDir("cli_eval");
  WriteFileAtomic(d / "c.jsonl", kCorpus);
  Result r = Cli({"eval", "--gold", (d / "c.jsonl").string(), "--pred", (d / "c.jsonl").string(),
                  "--json", (d / "r.json").string()});
  CHECK(r.code == 0);
  EvalReport rep = ReportFromJson(Slurp(d / "r.json"));
  CHECK(rep.macro_f1 == 1.0);
  CHECK(rep.accuracy == 1.0);
}

TEST_CASE("train, predict and the supervised-only flag") {
  const fs::path &s = SynthDir();
  fs::path d = TempDir("cli_train");
  std::string corpus = (s / "s" / "corpus.jsonl").string(), suite = (s / "s" / "lfs.json").string();
  std::string cfg = (s / "train.txt").string();
  Result r = Cli({"--quiet", "--config", cfg, "train", corpus, suite, "--supervised-only", "-o",
                  (d / "base").string()});
  REQUIRE(r.code == 0);
  std::string echo = Slurp(d / "base" / "config.txt");
  CHECK(echo.find("w_gm = 0\n") != std::string::npos);
  CHECK(echo.find("w_kl = 0\n") != std::string::npos);
  CHECK(echo.find("w_qg = 0\n") != std::string::npos);
  CHECK(echo.find("w_ce = 1\n") != std::string::npos);
  CHECK(fs::exists(d / "base" / "manifest.json"));
  CHECK(Slurp(d / "base" / "manifest.json").find("\"timestamp\"") == std::string::npos);

  Result p = Cli({"--quiet", "predict", (d / "base").string(), corpus, "-o",
                  (d / "p.jsonl").string()});
  REQUIRE(p.code == 0);
  Result e = Cli({"--quiet", "eval", "--gold", corpus, "--pred", (d / "p.jsonl").string(), "--json",
                  (d / "r.json").string()});
  REQUIRE(e.code == 0);
  CHECK(ReportFromJson(Slurp(d / "r.json")).count > 0);

  CHECK(Cli({"predict", (d / "nope").string(), corpus}).code == cli::kExitIo);
}

TEST_CASE("run-all is bit-identical across reruns and leaves nothing on failure") {
  const fs::path &s = SynthDir();
  fs::path d = TempDir("cli_runall");
  std::string corpus = (s / "s" / "corpus.jsonl").string(), suite = (s / "s" / "lfs.json").string();
  std::string cfg = (s / "train.txt").string();
  for (const char *name : {"a", "b"})
    REQUIRE(Cli({"--quiet", "--seed", "3", "--config", cfg, "run-all", corpus, suite, "-o",
                 (d / name).string()}).code == 0);
  for (const char *f : {"matrix.txt", "lf_report.txt", "split.json", "predictions.jsonl", "report.txt",
                        "report.json", "manifest.json", "model/theta.json", "model/phi.json",
                        "model/history.tsv", "model/meta.json", "model/config.txt", "model/lfs.json"})
    CHECK_MESSAGE(Slurp(d / "a" / f) == Slurp(d / "b" / f), f);

  WriteFileAtomic(d / "bad.txt", "learning_rate = -1\n");
  Result bad = Cli({"--config", (d / "bad.txt").string(), "run-all", corpus, suite, "-o",
                    (d / "c").string()});
  CHECK(bad.code == cli::kExitValidation);
  CHECK_FALSE(fs::exists(d / "c"));
  CHECK(Cli({"run-all", (d / "missing.jsonl").string(), suite, "-o", (d / "c").string()}).code ==
        cli::kExitIo);
  CHECK_FALSE(fs::exists(d / "c"));
}
