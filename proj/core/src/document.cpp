// core/src/document.cpp

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

#include "docws/document.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "docws/errors.hpp"
#include "docws/seed.hpp"

namespace docws {

using nlohmann::json;

std::optional<ClassId> Corpus::ClassIndex(const std::string &name) const {
  for (std::size_t k = 0; k < classes.size(); ++k)
    if (classes[k] == name) return static_cast<ClassId>(k + 1);
  return std::nullopt;
}

const std::string &Corpus::ClassName(ClassId k) const {
  if (k < 1 || k > NumClasses())
    throw ValidationError("class index " + std::to_string(k) +
                          " out of range 1.." + std::to_string(NumClasses()));
  return classes[static_cast<std::size_t>(k - 1)];
}

std::size_t Corpus::NumTokens() const {
  std::size_t n = 0;
  for (const auto &d : documents) n += d.tokens.size();
  return n;
}

namespace {

std::string LineErr(std::size_t line_no, const std::string &msg) {
  return "line " + std::to_string(line_no) + ": " + msg;
}

void CheckToken(const Document &doc, std::size_t idx, int num_classes) {
  const Token &t = doc.tokens[idx];
  auto where = "document '" + doc.doc_id + "' token " + std::to_string(idx);
  if (t.text.empty()) throw ValidationError(where + ": empty text");
  if (t.text.find('\n') != std::string::npos)
    throw ValidationError(where + ": text contains a newline");
  const BBox &b = t.bbox;
  for (double v : {b.x0, b.y0, b.x1, b.y1})
    if (!std::isfinite(v) || v < 0)
      throw ValidationError(where + ": bbox coordinates must be finite and >= 0");
  if (b.x1 < b.x0) throw ValidationError(where + ": bbox x1 < x0");
  if (b.y1 < b.y0) throw ValidationError(where + ": bbox y1 < y0");
  if (b.x1 > doc.page_width || b.y1 > doc.page_height)
    throw ValidationError(where + ": bbox extends outside the page");
  if (t.gold_label && (*t.gold_label < 1 || *t.gold_label > num_classes))
    throw ValidationError(where + ": gold label out of range");
}

void CheckDocument(const Document &doc, int num_classes) {
  if (doc.doc_id.empty()) throw ValidationError("empty doc_id");
  if (!(doc.page_width > 0) || !(doc.page_height > 0) ||
      !std::isfinite(doc.page_width) || !std::isfinite(doc.page_height))
    throw ValidationError("document '" + doc.doc_id +
                          "': page dimensions must be positive");
  for (std::size_t i = 0; i < doc.tokens.size(); ++i)
    CheckToken(doc, i, num_classes);
}

double NumberField(const json &obj, const char *field, std::size_t line_no) {
  auto it = obj.find(field);
  if (it == obj.end() || !it->is_number())
    throw ValidationError(
        LineErr(line_no, std::string("field '") + field + "' must be a number"));
  return it->get<double>();
}

Document ParseRecord(const json &rec, const Corpus &corpus,
                     std::size_t line_no) {
  if (!rec.is_object())
    throw ValidationError(LineErr(line_no, "record is not an object"));
  Document doc;
  auto id = rec.find("doc_id");
  if (id == rec.end() || !id->is_string())
    throw ValidationError(LineErr(line_no, "field 'doc_id' must be a string"));
  doc.doc_id = id->get<std::string>();
  doc.page_width = NumberField(rec, "width", line_no);
  doc.page_height = NumberField(rec, "height", line_no);
  auto toks = rec.find("tokens");
  if (toks == rec.end() || !toks->is_array())
    throw ValidationError(LineErr(line_no, "field 'tokens' must be an array"));
  std::size_t idx = 0;
  for (const auto &jt : *toks) {
    auto field = [&](const std::string &f) {
      return LineErr(line_no, "tokens[" + std::to_string(idx) + "]." + f);
    };
    if (!jt.is_object())
      throw ValidationError(field("") + " is not an object");
    Token t;
    auto text = jt.find("text");
    if (text == jt.end() || !text->is_string())
      throw ValidationError(field("text") + " must be a string");
    t.text = text->get<std::string>();
    auto bb = jt.find("bbox");
    if (bb == jt.end() || !bb->is_array() || bb->size() != 4)
      throw ValidationError(field("bbox") + " must be an array of 4 numbers");
    for (const auto &v : *bb)
      if (!v.is_number())
        throw ValidationError(field("bbox") + " must be an array of 4 numbers");
    t.bbox = {(*bb)[0].get<double>(), (*bb)[1].get<double>(),
              (*bb)[2].get<double>(), (*bb)[3].get<double>()};
    auto label = jt.find("label");
    if (label != jt.end() && !label->is_null()) {
      if (!label->is_string())
        throw ValidationError(field("label") + " must be a string");
      auto k = corpus.ClassIndex(label->get<std::string>());
      if (!k)
        throw ValidationError(field("label") + ": undeclared class '" +
                              label->get<std::string>() + "'");
      t.gold_label = *k;
    }
    doc.tokens.push_back(std::move(t));
    ++idx;
  }
  try {
    CheckDocument(doc, corpus.NumClasses());
  } catch (const ValidationError &e) {
    throw ValidationError(LineErr(line_no, e.what()));
  }
  return doc;
}

}  // namespace

void ValidateCorpus(const Corpus &corpus) {
  std::unordered_set<std::string> names;
  for (const auto &c : corpus.classes)
    if (c.empty() || !names.insert(c).second)
      throw ValidationError("class names must be non-empty and unique");
  std::unordered_set<std::string> ids;
  for (const auto &d : corpus.documents) {
    CheckDocument(d, corpus.NumClasses());
    if (!ids.insert(d.doc_id).second)
      throw ValidationError("duplicate doc_id '" + d.doc_id + "'");
  }
}

Corpus ParseDocuments(std::istream &in) {
  Corpus corpus;
  bool have_header = false;
  std::unordered_set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error &e) {
      throw ValidationError(LineErr(line_no, std::string("invalid JSON: ") + e.what()));
    }
    if (!have_header) {
      auto cls = rec.is_object() ? rec.find("classes") : rec.end();
      if (cls == rec.end() || !cls->is_array())
        throw ValidationError(
            LineErr(line_no, "expected header record with field 'classes'"));
      for (const auto &c : *cls) {
        if (!c.is_string())
          throw ValidationError(LineErr(line_no, "field 'classes' must hold strings"));
        corpus.classes.push_back(c.get<std::string>());
      }
      std::set<std::string> uniq(corpus.classes.begin(), corpus.classes.end());
      if (uniq.size() != corpus.classes.size() || uniq.count(""))
        throw ValidationError(
            LineErr(line_no, "field 'classes' must be unique non-empty names"));
      have_header = true;
      continue;
    }
    Document doc = ParseRecord(rec, corpus, line_no);
    if (!ids.insert(doc.doc_id).second)
      throw ValidationError(LineErr(line_no, "field 'doc_id': duplicate '" +
                                                 doc.doc_id + "'"));
    corpus.documents.push_back(std::move(doc));
  }
  return corpus;
}

Corpus ParseDocuments(const std::string &text) {
  std::istringstream in(text);
  return ParseDocuments(in);
}

Corpus LoadCorpus(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open corpus file '" + path + "'");
  return ParseDocuments(in);
}

void SerializeCorpus(const Corpus &corpus, std::ostream &out) {
  out << json{{"classes", corpus.classes}}.dump() << '\n';
  for (const auto &d : corpus.documents) {
    json toks = json::array();
    for (const auto &t : d.tokens) {
      json jt = {{"text", t.text},
                 {"bbox", {t.bbox.x0, t.bbox.y0, t.bbox.x1, t.bbox.y1}}};
      if (t.gold_label) jt["label"] = corpus.ClassName(*t.gold_label);
      toks.push_back(std::move(jt));
    }
    json rec = {{"doc_id", d.doc_id},
                {"width", d.page_width},
                {"height", d.page_height},
                {"tokens", std::move(toks)}};
    out << rec.dump() << '\n';
  }
}

std::string SerializeCorpus(const Corpus &corpus) {
  std::ostringstream out;
  SerializeCorpus(corpus, out);
  return out.str();
}

NormBBox NormalizeBBox(const BBox &bbox, double page_width, double page_height) {
  if (!(page_width > 0) || !(page_height > 0))
    throw ValidationError("page dimensions must be positive");
  auto unit = [](double v) { return std::clamp(v, 0.0, 1.0); };
  return {unit(bbox.x0 / page_width), unit(bbox.y0 / page_height),
          unit(bbox.x1 / page_width), unit(bbox.y1 / page_height)};
}

std::vector<std::size_t> ReadingOrder(const Document &doc) {
  const std::size_t n = doc.tokens.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  if (n < 2) return order;

  std::vector<double> heights;
  heights.reserve(n);
  for (const auto &t : doc.tokens) heights.push_back(t.bbox.y1 - t.bbox.y0);
  std::sort(heights.begin(), heights.end());
  double median = n % 2 ? heights[n / 2]
                        : 0.5 * (heights[n / 2 - 1] + heights[n / 2]);

  std::vector<double> bucket(n);
  for (std::size_t i = 0; i < n; ++i) {
    double y0 = doc.tokens[i].bbox.y0;
    bucket[i] = median > 0 ? std::floor(y0 / median) : y0;
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (bucket[a] != bucket[b]) return bucket[a] < bucket[b];
    return doc.tokens[a].bbox.x0 < doc.tokens[b].bbox.x0;
  });
  return order;
}

std::vector<InstanceRef> EnumerateInstances(const Corpus &corpus) {
  std::vector<InstanceRef> out;
  out.reserve(corpus.NumTokens());
  for (std::size_t d = 0; d < corpus.documents.size(); ++d)
    for (std::size_t t : ReadingOrder(corpus.documents[d])) out.push_back({d, t});
  return out;
}

std::size_t FractionToCount(double fraction, std::size_t n) {
  if (fraction <= 0) return 0;
  auto c = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  return std::max<std::size_t>(c, 1);
}

namespace {

bool FullyLabeled(const Document &d) {
  return std::all_of(d.tokens.begin(), d.tokens.end(),
                     [](const Token &t) { return t.gold_label.has_value(); });
}

}  // namespace

void FillInstances(const Corpus &corpus, CorpusSplit &split) {
  std::vector<int> role(corpus.documents.size(), -1);
  for (auto d : split.labeled_docs) role[d] = 0;
  for (auto d : split.unlabeled_docs) role[d] = 1;
  for (auto d : split.validation_docs) role[d] = 2;
  for (auto d : split.test_docs) role[d] = 3;
  split.labeled.clear();
  split.unlabeled.clear();
  split.validation.clear();
  split.test.clear();
  std::vector<std::size_t> *lists[] = {&split.labeled, &split.unlabeled,
                                       &split.validation, &split.test};
  auto instances = EnumerateInstances(corpus);
  for (std::size_t i = 0; i < instances.size(); ++i) {
    int r = role[instances[i].doc];
    if (r >= 0) lists[r]->push_back(i);
  }
}

CorpusSplit SplitCorpus(const Corpus &corpus, SplitCounts counts,
                        std::uint64_t seed) {
  const std::size_t n = corpus.documents.size();
  if (counts.labeled + counts.validation + counts.test > n)
    throw ValidationError("requested split counts exceed the corpus size");
  std::vector<std::size_t> eligible, rest;
  for (std::size_t d = 0; d < n; ++d)
    (FullyLabeled(corpus.documents[d]) ? eligible : rest).push_back(d);
  std::size_t need = counts.labeled + counts.validation + counts.test;
  if (eligible.size() < need)
    throw ValidationError("need " + std::to_string(need) +
                          " gold-labeled documents, corpus has " +
                          std::to_string(eligible.size()));

  std::mt19937_64 rng(DeriveSeed(seed, SeedStream::kSplit));
  std::shuffle(eligible.begin(), eligible.end(), rng);

  CorpusSplit split;
  split.seed = seed;
  if (n > 0)
    split.fractions = {double(counts.labeled) / n, double(counts.validation) / n,
                       double(counts.test) / n};
  auto take = [&](std::size_t from, std::size_t count) {
    return std::vector<std::size_t>(eligible.begin() + from,
                                    eligible.begin() + from + count);
  };
  split.labeled_docs = take(0, counts.labeled);
  split.validation_docs = take(counts.labeled, counts.validation);
  split.test_docs = take(counts.labeled + counts.validation, counts.test);
  std::vector<std::size_t> unl(eligible.begin() + need, eligible.end());
  unl.insert(unl.end(), rest.begin(), rest.end());
  std::shuffle(unl.begin(), unl.end(), rng);
  split.unlabeled_docs = std::move(unl);
  FillInstances(corpus, split);
  return split;
}

CorpusSplit SplitCorpus(const Corpus &corpus, SplitFractions f,
                        std::uint64_t seed) {
  for (double v : {f.labeled, f.validation, f.test})
    if (!(v >= 0 && v <= 1))
      throw ValidationError("split fractions must lie in [0, 1]");
  if (f.labeled + f.validation + f.test > 1 + 1e-12)
    throw ValidationError("split fractions sum to more than 1");
  const std::size_t n = corpus.documents.size();
  CorpusSplit split = SplitCorpus(
      corpus,
      SplitCounts{FractionToCount(f.labeled, n), FractionToCount(f.validation, n),
                  FractionToCount(f.test, n)},
      seed);
  split.fractions = f;
  return split;
}

CorpusSplit RestrictUnlabeled(const Corpus &corpus, const CorpusSplit &split,
                              std::size_t max_docs) {
  CorpusSplit out = split;
  if (out.unlabeled_docs.size() > max_docs) out.unlabeled_docs.resize(max_docs);
  FillInstances(corpus, out);
  return out;
}

std::vector<std::optional<ClassId>> GoldLabels(
    const Corpus &corpus, const std::vector<InstanceRef> &instances) {
  std::vector<std::optional<ClassId>> out;
  out.reserve(instances.size());
  for (const auto &r : instances)
    out.push_back(corpus.documents[r.doc].tokens[r.token].gold_label);
  return out;
}

std::vector<std::optional<ClassId>> TrainingLabelView(
    const Corpus &corpus, const std::vector<InstanceRef> &instances,
    const CorpusSplit &split) {
  std::vector<std::optional<ClassId>> out(instances.size());
  for (const auto *list : {&split.labeled, &split.validation, &split.test})
    for (auto i : *list)
      out[i] = corpus.documents[instances[i].doc].tokens[instances[i].token].gold_label;
  return out;
}

void WriteSplitManifest(const Corpus &corpus, const CorpusSplit &split,
                        std::ostream &out) {
  auto ids = [&](const std::vector<std::size_t> &docs) {
    json a = json::array();
    for (auto d : docs) a.push_back(corpus.documents[d].doc_id);
    return a;
  };
  json j = {{"labeled", ids(split.labeled_docs)},
            {"unlabeled", ids(split.unlabeled_docs)},
            {"validation", ids(split.validation_docs)},
            {"test", ids(split.test_docs)},
            {"seed", split.seed},
            {"fractions",
             {{"labeled", split.fractions.labeled},
              {"validation", split.fractions.validation},
              {"test", split.fractions.test}}}};
  out << j.dump(2) << '\n';
}

CorpusSplit ReadSplitManifest(const Corpus &corpus, std::istream &in) {
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception &e) {
    throw ValidationError(std::string("split manifest: ") + e.what());
  }
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t d = 0; d < corpus.documents.size(); ++d)
    index[corpus.documents[d].doc_id] = d;
  auto docs = [&](const char *key) {
    std::vector<std::size_t> out;
    if (!j.contains(key) || !j[key].is_array())
      throw ValidationError(std::string("split manifest: missing '") + key + "'");
    for (const auto &v : j[key]) {
      auto it = index.find(v.get<std::string>());
      if (it == index.end())
        throw ValidationError("split manifest: unknown doc_id '" +
                              v.get<std::string>() + "'");
      out.push_back(it->second);
    }
    return out;
  };
  CorpusSplit split;
  split.labeled_docs = docs("labeled");
  split.unlabeled_docs = docs("unlabeled");
  split.validation_docs = docs("validation");
  split.test_docs = docs("test");
  split.seed = j.value("seed", std::uint64_t{0});
  if (j.contains("fractions")) {
    const auto &f = j["fractions"];
    split.fractions = {f.value("labeled", 0.0), f.value("validation", 0.0),
                       f.value("test", 0.0)};
  }
  FillInstances(corpus, split);
  return split;
}

}  // namespace docws
