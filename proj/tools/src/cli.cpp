// tools/src/cli.cpp

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

#include "cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "docws/docws.hpp"

namespace docws::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Globals {
  std::optional<std::uint64_t> seed;
  std::string config;
  bool quiet = false;
  std::string out_dir = ".";
};

// Split keys accepted next to the TrainConfig keys.
struct SplitKeys {
  SplitFractions fractions{0.1, 0.1, 0.2};
  std::optional<std::size_t> unlabeled_docs;
};

void RequireFile(const std::string &path, const char *what) {
  std::error_code ec;
  if (!fs::is_regular_file(path, ec))
    throw IoError(std::string(what) + " '" + path + "' not found");
}

void RequireDir(const std::string &path, const char *what) {
  std::error_code ec;
  if (!fs::is_directory(path, ec))
    throw IoError(std::string(what) + " '" + path + "' not found");
}

std::vector<KeyValue> ConfigLines(const Globals &g) {
  if (g.config.empty()) return {};
  RequireFile(g.config, "config");
  return LoadKeyValues(g.config);
}

void ApplySplitKey(SplitKeys &s, const KeyValue &kv) {
  if (kv.key == "labeled_fraction") s.fractions.labeled = ParseDouble(kv);
  else if (kv.key == "validation_fraction") s.fractions.validation = ParseDouble(kv);
  else if (kv.key == "test_fraction") s.fractions.test = ParseDouble(kv);
  else if (kv.key == "unlabeled_docs") s.unlabeled_docs = static_cast<std::size_t>(ParseInt(kv));
  else throw ValidationError("config line " + std::to_string(kv.line) + ": unknown key '" + kv.key + "'");
}

std::pair<TrainConfig, SplitKeys> TrainSettings(const Globals &g) {
  TrainConfig c;
  SplitKeys s;
  for (const auto &kv : ConfigLines(g))
    if (!ApplyTrainKey(c, kv)) ApplySplitKey(s, kv);
  if (g.seed) c.seed = *g.seed;
  c.Validate();
  return {c, s};
}

fs::path OutPath(const Globals &g, const std::string &explicit_path, const char *fallback) {
  return explicit_path.empty() ? fs::path(g.out_dir) / fallback : fs::path(explicit_path);
}

void EnsureParent(const fs::path &p) {
  std::error_code ec;
  if (p.has_parent_path()) fs::create_directories(p.parent_path(), ec);
  if (ec) throw IoError("cannot create directory '" + p.parent_path().string() + "'");
}

std::string Fnv1a(const std::string &bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// Manifests carry no timestamps so reruns stay byte-identical.
std::string Manifest(const std::string &command, const std::vector<std::string> &inputs,
                     std::optional<std::uint64_t> seed, const std::string &config,
                     const std::vector<std::string> &outputs) {
  json in = json::array();
  for (const auto &p : inputs) in.push_back({{"path", p}, {"fnv1a64", Fnv1a(ReadFile(p))}});
  json j = {{"tool", "docws"},
            {"version", kVersion},
            {"command", command},
            {"inputs", in},
            {"seed", seed ? json(*seed) : json(nullptr)},
            {"config", config},
            {"outputs", outputs}};
  return j.dump(2) + "\n";
}

std::string ManifestPathFor(const fs::path &output) {
  fs::path m = output;
  m += ".manifest.json";
  return m.string();
}

std::string ToString(const std::function<void(std::ostream &)> &fn) {
  std::ostringstream o;
  fn(o);
  return o.str();
}

std::vector<std::optional<ClassId>> MatrixGold(const LabelMatrix &matrix, const Corpus &corpus) {
  std::map<std::string, std::size_t> doc_index;
  for (std::size_t d = 0; d < corpus.documents.size(); ++d)
    doc_index[corpus.documents[d].doc_id] = d;
  if (matrix.classes != corpus.classes)
    throw ValidationError("matrix classes do not match the corpus classes");
  std::vector<std::optional<ClassId>> gold(matrix.n_instances);
  for (std::size_t i = 0; i < matrix.n_instances; ++i) {
    const InstanceRef &r = matrix.instance_index[i];
    if (r.doc >= matrix.doc_ids.size()) throw ValidationError("matrix row " + std::to_string(i) + ": bad document index");
    auto it = doc_index.find(matrix.doc_ids[r.doc]);
    if (it == doc_index.end())
      throw ValidationError("matrix references unknown doc_id '" + matrix.doc_ids[r.doc] + "'");
    const Document &doc = corpus.documents[it->second];
    if (r.token >= doc.tokens.size())
      throw ValidationError("matrix row " + std::to_string(i) + ": token out of range");
    gold[i] = doc.tokens[r.token].gold_label;
  }
  return gold;
}

void CheckMatrixMatches(const LabelMatrix &m, const Corpus &corpus,
                        const std::vector<LabelingFunction> &lfs) {
  if (m.n_instances != corpus.NumTokens())
    throw ValidationError("matrix has " + std::to_string(m.n_instances) + " rows, corpus has " +
                          std::to_string(corpus.NumTokens()) + " tokens");
  if (m.n_lfs != lfs.size()) throw ValidationError("matrix LF count does not match the suite");
  for (std::size_t d = 0; d < corpus.documents.size(); ++d)
    if (d >= m.doc_ids.size() || m.doc_ids[d] != corpus.documents[d].doc_id)
      throw ValidationError("matrix documents do not match the corpus");
  for (std::size_t j = 0; j < lfs.size(); ++j)
    if (m.lf_ids[j] != lfs[j].id) throw ValidationError("matrix LF ids do not match the suite");
}

void Report(const LabelMatrix &matrix, const std::vector<std::optional<ClassId>> *gold,
            std::ostream &out, std::ostream &err, bool quiet, std::string *text = nullptr) {
  LfDiagnostics d = Diagnostics(matrix, gold);
  std::string table = ToString([&](std::ostream &o) { PrintDiagnostics(matrix, d, o); });
  if (!quiet) out << table;
  if (text) *text = table;
  for (const auto &id : SilentLfs(matrix, d)) err << "warning: LF '" << id << "' never fires\n";
}

// Everything training needs, computed in memory.
struct Prepared {
  Corpus corpus;
  std::vector<LabelingFunction> lfs;
  std::vector<InstanceRef> instances;
  std::vector<FeatureVector> features;
  LabelMatrix matrix;
  CorpusSplit split;
};

Prepared Prepare(const std::string &corpus_path, const std::string &suite_path,
                 const std::string &matrix_path, const std::string &split_path,
                 const TrainConfig &cfg, const SplitKeys &sk) {
  Prepared p;
  p.corpus = LoadCorpus(corpus_path);
  p.lfs = LoadLfSuite(suite_path, p.corpus.classes);
  p.instances = EnumerateInstances(p.corpus);
  if (!matrix_path.empty()) {
    std::istringstream in(ReadFile(matrix_path));
    p.matrix = ReadLabelMatrix(in);
    CheckMatrixMatches(p.matrix, p.corpus, p.lfs);
  } else {
    p.matrix = BuildLabelMatrix(p.lfs, p.corpus, cfg.context);
  }
  if (!split_path.empty()) {
    std::istringstream in(ReadFile(split_path));
    p.split = ReadSplitManifest(p.corpus, in);
  } else {
    p.split = SplitCorpus(p.corpus, sk.fractions, cfg.seed);
    if (sk.unlabeled_docs) p.split = RestrictUnlabeled(p.corpus, p.split, *sk.unlabeled_docs);
  }
  p.features = FeaturizeCorpus(p.corpus, cfg.context, cfg.hash_bits);
  return p;
}

TrainedModel TrainPrepared(const Prepared &p, const TrainConfig &cfg) {
  auto view = TrainingLabelView(p.corpus, p.instances, p.split);
  TrainingInputs in;
  in.matrix = &p.matrix;
  in.features = p.features;
  in.labels = view;
  in.split = &p.split;
  in.classes = p.corpus.classes;
  in.lfs = p.lfs;
  return Train(in, cfg);
}

std::string SummarizeTraining(const TrainedModel &m) {
  std::ostringstream o;
  o << FormatHistory(m.history);
  const auto &best = m.history[m.best_epoch];
  o << "best epoch " << best.epoch << ", validation macro-F1 " << FormatDouble(best.val_f1) << '\n';
  return o.str();
}

std::vector<std::size_t> PartDocs(const CorpusSplit &split, const std::string &part,
                                  std::size_t n_docs) {
  if (part == "labeled") return split.labeled_docs;
  if (part == "unlabeled") return split.unlabeled_docs;
  if (part == "validation") return split.validation_docs;
  if (part == "test") return split.test_docs;
  std::vector<std::size_t> all(n_docs);
  for (std::size_t d = 0; d < n_docs; ++d) all[d] = d;
  return all;
}

// One JSON header line, then one line per token in instance order.
std::string Predictions(const TrainedModel &model, const Corpus &corpus,
                        const std::vector<InstanceRef> &instances,
                        const std::vector<FeatureVector> &features, const LabelMatrix *matrix,
                        const std::vector<std::size_t> &docs) {
  std::vector<char> keep(corpus.documents.size(), 0);
  for (auto d : docs) keep[d] = 1;
  std::ostringstream o;
  o << json{{"kind", "predictions"}, {"classes", model.classes}}.dump() << '\n';
  for (std::size_t i = 0; i < instances.size(); ++i) {
    if (!keep[instances[i].doc]) continue;
    TokenPrediction p = matrix ? PredictTokenFused(model, features[i],
                                                   {matrix->Row(i), matrix->n_lfs})
                               : PredictToken(model, features[i]);
    o << json{{"doc_id", corpus.documents[instances[i].doc].doc_id},
              {"token", instances[i].token},
              {"label", model.classes[p.label - 1]},
              {"probs", p.dist.probs}}
             .dump()
      << '\n';
  }
  return o.str();
}

struct PredictedToken {
  std::string doc_id;
  std::size_t token = 0;
  std::string label;
};

// Accepts a predictions file or a labeled corpus (its gold labels are read
// as the predictions).
std::vector<PredictedToken> LoadPredictions(const std::string &path) {
  std::string text = ReadFile(path);
  std::istringstream in(text);
  std::string line;
  std::size_t no = 0;
  json header;
  while (std::getline(in, line)) {
    ++no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      header = json::parse(line);
    } catch (const json::exception &e) {
      throw ValidationError("predictions line " + std::to_string(no) + ": " + e.what());
    }
    break;
  }
  std::vector<PredictedToken> out;
  if (!header.is_object() || !header.contains("classes"))
    throw ValidationError("predictions: missing header line");
  if (header.value("kind", std::string()) != "predictions") {
    Corpus c = ParseDocuments(text);
    for (const auto &d : c.documents)
      for (std::size_t t = 0; t < d.tokens.size(); ++t) {
        if (!d.tokens[t].gold_label)
          throw ValidationError("prediction corpus: doc '" + d.doc_id + "' token " + std::to_string(t) + " has no label");
        out.push_back({d.doc_id, t, c.ClassName(*d.tokens[t].gold_label)});
      }
    return out;
  }
  while (std::getline(in, line)) {
    ++no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto j = json::parse(line);
      out.push_back({j.at("doc_id").get<std::string>(), j.at("token").get<std::size_t>(),
                     j.at("label").get<std::string>()});
    } catch (const json::exception &e) {
      throw ValidationError("predictions line " + std::to_string(no) + ": " + e.what());
    }
  }
  return out;
}

EvalReport ScorePredictions(const Corpus &gold, const std::vector<PredictedToken> &preds,
                            const std::vector<std::string> &mask) {
  for (const auto &m : mask)
    if (!gold.ClassIndex(m)) throw ValidationError("--mask: unknown class '" + m + "'");
  std::map<std::string, std::size_t> doc_index;
  for (std::size_t d = 0; d < gold.documents.size(); ++d) doc_index[gold.documents[d].doc_id] = d;
  std::vector<ClassId> g, p;
  for (const auto &t : preds) {
    auto it = doc_index.find(t.doc_id);
    if (it == doc_index.end()) throw ValidationError("prediction for unknown doc_id '" + t.doc_id + "'");
    const Document &doc = gold.documents[it->second];
    if (t.token >= doc.tokens.size())
      throw ValidationError("prediction for doc '" + t.doc_id + "' token " + std::to_string(t.token) + " out of range");
    auto label = gold.ClassIndex(t.label);
    if (!label) throw ValidationError("prediction uses unknown class '" + t.label + "'");
    if (!doc.tokens[t.token].gold_label) continue;
    g.push_back(*doc.tokens[t.token].gold_label);
    p.push_back(*label);
  }
  if (g.empty()) throw ValidationError("no predicted token carries a gold label");
  return Score(g, p, gold.classes, mask);
}

// ---------------------------------------------------------------------------
// Subcommands

int CmdIngest(const Globals &g, const std::string &input, const std::string &output,
              std::ostream &out) {
  RequireFile(input, "corpus");
  Corpus c = LoadCorpus(input);
  fs::path dst = OutPath(g, output, "corpus.jsonl");
  EnsureParent(dst);
  WriteFileAtomic(dst, SerializeCorpus(c));
  WriteFileAtomic(ManifestPathFor(dst), Manifest("ingest", {input}, g.seed, "", {dst.filename().string()}));
  out << c.documents.size() << " docs, " << c.NumTokens() << " tokens, " << c.NumClasses()
      << " classes\n";
  return kExitOk;
}

int CmdLfApply(const Globals &g, const std::string &corpus_path, const std::string &suite_path,
               const std::string &output, std::ostream &out) {
  RequireFile(corpus_path, "corpus");
  RequireFile(suite_path, "LF suite");
  auto [cfg, sk] = TrainSettings(g);
  Corpus c = LoadCorpus(corpus_path);
  auto lfs = LoadLfSuite(suite_path, c.classes);
  LabelMatrix m = BuildLabelMatrix(lfs, c, cfg.context);
  fs::path dst = OutPath(g, output, "matrix.txt");
  EnsureParent(dst);
  WriteFileAtomic(dst, ToString([&](std::ostream &o) { WriteLabelMatrix(m, o); }));
  WriteFileAtomic(ManifestPathFor(dst), Manifest("lf-apply", {corpus_path, suite_path}, g.seed,
                                                 FormatTrainConfig(cfg), {dst.filename().string()}));
  if (!g.quiet) out << m.n_instances << " x " << m.n_lfs << " label matrix -> " << dst.string() << '\n';
  return kExitOk;
}

int CmdLfReport(const Globals &g, const std::string &matrix_path, const std::string &corpus_path,
                const std::string &json_path, std::ostream &out, std::ostream &err) {
  RequireFile(matrix_path, "label matrix");
  if (!corpus_path.empty()) RequireFile(corpus_path, "corpus");
  std::istringstream in(ReadFile(matrix_path));
  LabelMatrix m = ReadLabelMatrix(in);
  std::vector<std::optional<ClassId>> gold;
  if (!corpus_path.empty()) gold = MatrixGold(m, LoadCorpus(corpus_path));
  Report(m, corpus_path.empty() ? nullptr : &gold, out, err, false);
  if (!json_path.empty()) {
    EnsureParent(json_path);
    WriteFileAtomic(json_path, DiagnosticsJson(m, Diagnostics(m, corpus_path.empty() ? nullptr : &gold)) + "\n");
  }
  (void)g;
  return kExitOk;
}

int CmdTrain(const Globals &g, const std::string &corpus_path, const std::string &suite_path,
             const std::string &matrix_path, const std::string &split_path, bool supervised_only,
             const std::string &output, std::ostream &out) {
  RequireFile(corpus_path, "corpus");
  RequireFile(suite_path, "LF suite");
  if (!matrix_path.empty()) RequireFile(matrix_path, "label matrix");
  if (!split_path.empty()) RequireFile(split_path, "split manifest");
  auto [cfg, sk] = TrainSettings(g);
  if (supervised_only) cfg.SetSupervisedOnly();
  Prepared p = Prepare(corpus_path, suite_path, matrix_path, split_path, cfg, sk);
  TrainedModel model = TrainPrepared(p, cfg);

  fs::path dst = OutPath(g, output, "model");
  EnsureParent(dst);
  StagedDirectory stage(dst);
  WriteBundle(model, stage.path());
  WriteFileAtomic(stage.path() / "split.json",
                  ToString([&](std::ostream &o) { WriteSplitManifest(p.corpus, p.split, o); }));
  std::vector<std::string> inputs{corpus_path, suite_path};
  if (!matrix_path.empty()) inputs.push_back(matrix_path);
  if (!split_path.empty()) inputs.push_back(split_path);
  WriteFileAtomic(stage.path() / "manifest.json",
                  Manifest("train", inputs, cfg.seed, FormatTrainConfig(cfg),
                           {"theta.json", "phi.json", "lfs.json", "config.txt", "history.tsv",
                            "meta.json", "split.json"}));
  stage.Commit();
  if (!g.quiet) out << SummarizeTraining(model);
  return kExitOk;
}

int CmdPredict(const Globals &g, const std::string &model_dir, const std::string &corpus_path,
               const std::string &split_path, const std::string &part, bool fuse,
               const std::string &output, std::ostream &out) {
  RequireDir(model_dir, "model bundle");
  RequireFile(corpus_path, "corpus");
  if (!split_path.empty()) RequireFile(split_path, "split manifest");
  TrainedModel model = ReadBundle(model_dir);
  Corpus c = LoadCorpus(corpus_path);
  if (c.classes != model.classes) throw ValidationError("corpus classes do not match the model");
  auto instances = EnumerateInstances(c);
  auto features = FeaturizeCorpus(c, model.config.context, model.config.hash_bits);
  std::optional<LabelMatrix> matrix;
  if (fuse) matrix = BuildLabelMatrix(model.lfs, c, model.config.context);
  std::vector<std::size_t> docs;
  if (!split_path.empty()) {
    std::istringstream in(ReadFile(split_path));
    docs = PartDocs(ReadSplitManifest(c, in), part, c.documents.size());
  } else {
    if (part != "all") throw ValidationError("--part needs --split");
    docs = PartDocs({}, "all", c.documents.size());
  }
  fs::path dst = OutPath(g, output, "predictions.jsonl");
  EnsureParent(dst);
  std::string text = Predictions(model, c, instances, features, matrix ? &*matrix : nullptr, docs);
  WriteFileAtomic(dst, text);
  std::vector<std::string> inputs{(fs::path(model_dir) / "phi.json").string(),
                                  (fs::path(model_dir) / "theta.json").string(), corpus_path};
  if (!split_path.empty()) inputs.push_back(split_path);
  WriteFileAtomic(ManifestPathFor(dst), Manifest("predict", inputs, model.config.seed,
                                                 "part = " + part + "\nfuse = " + (fuse ? "true" : "false") + "\n",
                                                 {dst.filename().string()}));
  if (!g.quiet)
    out << std::count(text.begin(), text.end(), '\n') - 1 << " token predictions -> " << dst.string() << '\n';
  return kExitOk;
}

int CmdEval(const Globals &g, const std::string &gold_path, const std::string &pred_path,
            const std::vector<std::string> &mask, const std::string &json_path,
            const std::string &compare_path, std::ostream &out) {
  RequireFile(gold_path, "gold corpus");
  RequireFile(pred_path, "predictions");
  if (!compare_path.empty()) RequireFile(compare_path, "baseline report");
  Corpus gold = LoadCorpus(gold_path);
  EvalReport r = ScorePredictions(gold, LoadPredictions(pred_path), mask);
  PrintReport(r, out);
  if (!compare_path.empty()) {
    EvalReport base = ReportFromJson(ReadFile(compare_path));
    out << '\n';
    PrintDeltas(Compare(base, r), "baseline", "current", out);
  }
  if (!json_path.empty()) {
    EnsureParent(json_path);
    WriteFileAtomic(json_path, ReportJson(r) + "\n");
    WriteFileAtomic(ManifestPathFor(json_path), Manifest("eval", {gold_path, pred_path}, g.seed, "",
                                                         {fs::path(json_path).filename().string()}));
  }
  return kExitOk;
}

SynthSpec LoadSpec(const Globals &g, const std::string &spec_path) {
  SynthSpec spec = SynthSpec::Default();
  if (!spec_path.empty()) {
    RequireFile(spec_path, "synth spec");
    spec = SynthSpecFrom(LoadKeyValues(spec_path));
  }
  if (g.seed) spec.seed = *g.seed;
  return spec;
}

int CmdSynth(const Globals &g, const std::string &spec_path, const std::string &output,
             std::ostream &out, std::ostream &err) {
  SynthSpec spec = LoadSpec(g, spec_path);
  auto [cfg, sk] = TrainSettings(g);
  SynthData data = Generate(spec, cfg.context);
  LabelMatrix m = BuildLabelMatrix(data.lfs, data.corpus, cfg.context);
  auto gold = GoldLabels(data.corpus, EnumerateInstances(data.corpus));
  std::string report;
  Report(m, &gold, out, err, g.quiet, &report);

  fs::path dst = OutPath(g, output, "synth");
  EnsureParent(dst);
  StagedDirectory stage(dst);
  WriteFileAtomic(stage.path() / "corpus.jsonl", SerializeCorpus(data.corpus));
  WriteFileAtomic(stage.path() / "lfs.json", SerializeLfSuite(data.lfs, data.corpus.classes));
  WriteFileAtomic(stage.path() / "spec.txt", FormatSynthSpec(spec));
  WriteFileAtomic(stage.path() / "lf_report.txt", report);
  std::vector<std::string> inputs;
  if (!spec_path.empty()) inputs.push_back(spec_path);
  WriteFileAtomic(stage.path() / "manifest.json",
                  Manifest("synth", inputs, spec.seed, FormatSynthSpec(spec),
                           {"corpus.jsonl", "lfs.json", "spec.txt", "lf_report.txt"}));
  stage.Commit();
  if (!g.quiet)
    out << data.corpus.documents.size() << " docs, " << data.corpus.NumTokens() << " tokens, "
        << data.lfs.size() << " LFs -> " << dst.string() << '\n';
  return kExitOk;
}

int CmdSweep(const Globals &g, const std::string &spec_path, const std::string &output,
             std::ostream &out, std::ostream &err) {
  SynthSpec spec = LoadSpec(g, spec_path);
  SweepConfig sc;
  std::vector<KeyValue> rest;
  sc = SweepConfigFrom(ConfigLines(g), sc, &rest);
  for (const auto &kv : rest)
    if (!ApplyTrainKey(sc.train, kv))
      throw ValidationError("config line " + std::to_string(kv.line) + ": unknown key '" + kv.key + "'");
  sc.train.Validate();
  SweepResult r = RunSweep(spec, sc, [&](const SweepCell &c) {
    if (g.quiet) return;
    char line[160];
    std::snprintf(line, sizeof line, "L=%g%% U=%g%% seed %llu: supervised %.4f joint %.4f\n",
                  100 * c.labeled, 100 * c.unlabeled, static_cast<unsigned long long>(c.seed),
                  c.baseline_f1, c.joint_f1);
    err << line;
  });
  std::string table = FormatSweepTable(r);
  fs::path dst = OutPath(g, output, "sweep");
  EnsureParent(dst);
  StagedDirectory stage(dst);
  WriteFileAtomic(stage.path() / "sweep.json", SweepJson(r));
  WriteFileAtomic(stage.path() / "sweep.txt", table);
  std::vector<std::string> inputs;
  if (!spec_path.empty()) inputs.push_back(spec_path);
  if (!g.config.empty()) inputs.push_back(g.config);
  WriteFileAtomic(stage.path() / "manifest.json",
                  Manifest("sweep", inputs, spec.seed,
                           FormatSynthSpec(spec) + FormatTrainConfig(sc.train),
                           {"sweep.json", "sweep.txt"}));
  stage.Commit();
  out << table;
  return kExitOk;
}

int CmdRunAll(const Globals &g, const std::string &corpus_path, const std::string &suite_path,
              bool supervised_only, const std::vector<std::string> &mask,
              const std::string &output, std::ostream &out, std::ostream &err) {
  RequireFile(corpus_path, "corpus");
  RequireFile(suite_path, "LF suite");
  auto [cfg, sk] = TrainSettings(g);
  if (supervised_only) cfg.SetSupervisedOnly();
  Prepared p = Prepare(corpus_path, suite_path, "", "", cfg, sk);
  auto gold = GoldLabels(p.corpus, p.instances);
  std::string lf_report;
  Report(p.matrix, &gold, out, err, true, &lf_report);
  TrainedModel model = TrainPrepared(p, cfg);
  std::string preds = Predictions(model, p.corpus, p.instances, p.features, nullptr, p.split.test_docs);

  std::vector<PredictedToken> parsed;
  {
    std::istringstream in(preds);
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      auto j = json::parse(line);
      parsed.push_back({j["doc_id"], j["token"], j["label"]});
    }
  }
  EvalReport r = ScorePredictions(p.corpus, parsed, mask);
  std::string report = ToString([&](std::ostream &o) { PrintReport(r, o); });

  fs::path dst = OutPath(g, output, "run");
  EnsureParent(dst);
  StagedDirectory stage(dst);
  WriteFileAtomic(stage.path() / "matrix.txt",
                  ToString([&](std::ostream &o) { WriteLabelMatrix(p.matrix, o); }));
  WriteFileAtomic(stage.path() / "lf_report.txt", lf_report);
  fs::create_directories(stage.path() / "model");
  WriteBundle(model, stage.path() / "model");
  WriteFileAtomic(stage.path() / "split.json",
                  ToString([&](std::ostream &o) { WriteSplitManifest(p.corpus, p.split, o); }));
  WriteFileAtomic(stage.path() / "predictions.jsonl", preds);
  WriteFileAtomic(stage.path() / "report.txt", report);
  WriteFileAtomic(stage.path() / "report.json", ReportJson(r) + "\n");
  WriteFileAtomic(stage.path() / "manifest.json",
                  Manifest("run-all", {corpus_path, suite_path}, cfg.seed, FormatTrainConfig(cfg),
                           {"matrix.txt", "lf_report.txt", "model/", "split.json",
                            "predictions.jsonl", "report.txt", "report.json"}));
  stage.Commit();
  if (!g.quiet) {
    out << lf_report << '\n' << SummarizeTraining(model) << '\n' << report;
  }
  return kExitOk;
}

}  // namespace

int Run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
  CLI::App app{"docws: weak supervision for document token labeling"};
  app.set_version_flag("--version", std::string("docws ") + kVersion);
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "Root seed (overrides config)");
  app.add_option("--config", g.config, "Flat key = value config file");
  app.add_flag("--quiet", g.quiet, "Suppress progress and tables");
  app.add_option("--out-dir", g.out_dir, "Default output directory");

  std::string a, b, c, d, output, json_out, part = "all";
  std::vector<std::string> mask;
  bool flag = false;
  auto add_out = [&](CLI::App *s) { s->add_option("-o,--output", output, "Output path"); };

  auto *ingest = app.add_subcommand("ingest", "Validate and normalize a corpus");
  ingest->add_option("corpus", a)->required();
  add_out(ingest);

  auto *lf_apply = app.add_subcommand("lf-apply", "Apply an LF suite, write the label matrix");
  lf_apply->add_option("corpus", a)->required();
  lf_apply->add_option("suite", b)->required();
  add_out(lf_apply);

  auto *lf_report = app.add_subcommand("lf-report", "Coverage / overlap / conflict table");
  lf_report->add_option("matrix", a)->required();
  lf_report->add_option("--corpus", b, "Gold corpus for the precision column");
  lf_report->add_option("--json", json_out, "Also write the diagnostics as JSON");

  auto *train = app.add_subcommand("train", "Joint training; writes a model bundle");
  train->add_option("corpus", a)->required();
  train->add_option("suite", b)->required();
  train->add_option("--matrix", c, "Reuse a label matrix from lf-apply");
  train->add_option("--split", d, "Reuse a split manifest");
  train->add_flag("--supervised-only", flag, "Cross-entropy only (w_gm = w_kl = w_qg = 0)");
  add_out(train);

  auto *predict = app.add_subcommand("predict", "Token predictions from a model bundle");
  predict->add_option("model", a)->required();
  predict->add_option("corpus", b)->required();
  predict->add_option("--split", d, "Split manifest (with --part)");
  predict->add_option("--part", part, "labeled|unlabeled|validation|test|all")
      ->check(CLI::IsMember({"labeled", "unlabeled", "validation", "test", "all"}));
  predict->add_flag("--fuse", flag, "Average with the label-model posterior where LFs fire");
  add_out(predict);

  auto *eval = app.add_subcommand("eval", "Score predictions against a gold corpus");
  eval->add_option("--gold", a)->required();
  eval->add_option("--pred", b)->required();
  eval->add_option("--mask", mask, "Class excluded from macro averages (repeatable)");
  eval->add_option("--json", json_out, "Write the report as JSON");
  eval->add_option("--compare", c, "Baseline report JSON to diff against");

  auto *synth = app.add_subcommand("synth", "Generate a synthetic corpus and LF suite");
  synth->add_option("--spec", a, "Synthetic spec file");
  add_out(synth);

  auto *sweep = app.add_subcommand("sweep", "Supervised vs joint over labeled/unlabeled fractions");
  sweep->add_option("--spec", a, "Synthetic spec file");
  add_out(sweep);

  auto *run_all = app.add_subcommand("run-all", "lf-apply, lf-report, train, predict and eval in one go");
  run_all->add_option("corpus", a)->required();
  run_all->add_option("suite", b)->required();
  run_all->add_flag("--supervised-only", flag);
  run_all->add_option("--mask", mask, "Class excluded from macro averages (repeatable)");
  add_out(run_all);

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp &e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion &e) {
    out << "docws " << kVersion << '\n';
    return kExitOk;
  } catch (const CLI::ParseError &e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  }

  try {
    if (*ingest) return CmdIngest(g, a, output, out);
    if (*lf_apply) return CmdLfApply(g, a, b, output, out);
    if (*lf_report) return CmdLfReport(g, a, b, json_out, out, err);
    if (*train) return CmdTrain(g, a, b, c, d, flag, output, out);
    if (*predict) return CmdPredict(g, a, b, d, part, flag, output, out);
    if (*eval) return CmdEval(g, a, b, mask, json_out, c, out);
    if (*synth) return CmdSynth(g, a, output, out, err);
    if (*sweep) return CmdSweep(g, a, output, out, err);
    if (*run_all) return CmdRunAll(g, a, b, flag, mask, output, out, err);
  } catch (const IoError &e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const ValidationError &e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const fs::filesystem_error &e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception &e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  return kExitValidation;
}

}  // namespace docws::cli
