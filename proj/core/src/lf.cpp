// core/src/lf.cpp

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

#include "docws/lf.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "docws/errors.hpp"

namespace docws {

using nlohmann::json;

const char *DirectionName(Direction d) {
  switch (d) {
    case Direction::kLeft: return "left";
    case Direction::kRight: return "right";
    case Direction::kAbove: return "above";
    case Direction::kBelow: return "below";
  }
  return "?";
}

std::optional<Direction> ParseDirection(const std::string &name) {
  if (name == "left") return Direction::kLeft;
  if (name == "right") return Direction::kRight;
  if (name == "above") return Direction::kAbove;
  if (name == "below") return Direction::kBelow;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Context

std::shared_ptr<const DocLayout> MakeLayout(const Document &doc) {
  auto layout = std::make_shared<DocLayout>();
  layout->doc = &doc;
  layout->boxes.reserve(doc.tokens.size());
  for (const auto &t : doc.tokens)
    layout->boxes.push_back(NormalizeBBox(t.bbox, doc.page_width, doc.page_height));
  layout->order = ReadingOrder(doc);
  layout->position.resize(layout->order.size());
  for (std::size_t p = 0; p < layout->order.size(); ++p)
    layout->position[layout->order[p]] = p;
  return layout;
}

namespace {

ContextEntry Relate(const DocLayout &layout, std::size_t from, std::size_t to) {
  const NormBBox &a = layout.boxes[from];
  const NormBBox &b = layout.boxes[to];
  double dx = b.CenterX() - a.CenterX();
  double dy = b.CenterY() - a.CenterY();
  Direction dir;
  if (std::abs(dx) >= std::abs(dy))
    dir = dx >= 0 ? Direction::kRight : Direction::kLeft;
  else
    dir = dy > 0 ? Direction::kBelow : Direction::kAbove;
  return {to, dir, std::hypot(dx, dy)};
}

}  // namespace

TokenContext ContextOf(std::shared_ptr<const DocLayout> layout,
                       std::size_t token_idx, const ContextParams &params) {
  TokenContext ctx;
  ctx.params = params;
  ctx.token = token_idx;
  const std::size_t n = layout->boxes.size();
  std::vector<char> taken(n, 0);
  taken[token_idx] = 1;

  const std::size_t pos = layout->position[token_idx];
  const std::size_t w = static_cast<std::size_t>(std::max(params.window, 0));
  std::size_t lo = pos >= w ? pos - w : 0;
  std::size_t hi = std::min(n - 1, pos + w);
  for (std::size_t p = lo; p <= hi; ++p) {
    std::size_t t = layout->order[p];
    if (!taken[t]) {
      taken[t] = 1;
      ctx.neighbors.push_back(Relate(*layout, token_idx, t));
    }
  }
  if (params.radius > 0) {
    for (std::size_t t = 0; t < n; ++t) {
      if (taken[t]) continue;
      ContextEntry e = Relate(*layout, token_idx, t);
      if (e.distance <= params.radius) {
        taken[t] = 1;
        ctx.neighbors.push_back(e);
      }
    }
  }
  std::sort(ctx.neighbors.begin(), ctx.neighbors.end(),
            [](const ContextEntry &a, const ContextEntry &b) {
              if (a.distance != b.distance) return a.distance < b.distance;
              return a.token < b.token;
            });
  ctx.layout = std::move(layout);
  return ctx;
}

TokenContext ContextOf(const Document &doc, std::size_t token_idx,
                       const ContextParams &params) {
  if (token_idx >= doc.tokens.size())
    throw ValidationError("token index out of range");
  return ContextOf(MakeLayout(doc), token_idx, params);
}

// ---------------------------------------------------------------------------
// Rules

RulePtr MakeRegex(const std::string &pattern) {
  RegexRule r;
  r.pattern = pattern;
  try {
    r.compiled = std::make_shared<const std::regex>(pattern, std::regex::ECMAScript);
  } catch (const std::regex_error &e) {
    throw ValidationError("malformed regex '" + pattern + "': " + e.what());
  }
  return std::make_shared<const Rule>(Rule{std::move(r)});
}

RulePtr MakeKeyword(const std::vector<std::string> &words, MatchMode mode) {
  KeywordRule r;
  r.mode = mode;
  for (const auto &w : words) {
    auto n = NormalizeKeyword(w);
    if (!n.empty()) r.lexicon.insert(std::move(n));
  }
  return std::make_shared<const Rule>(Rule{std::move(r)});
}

RulePtr MakeRegion(NormBBox region) {
  return std::make_shared<const Rule>(Rule{RegionRule{region}});
}

RulePtr MakeNeighbor(Direction direction, RulePtr inner) {
  return std::make_shared<const Rule>(Rule{NeighborRule{direction, std::move(inner)}});
}

RulePtr MakeAllOf(std::vector<RulePtr> children) {
  return std::make_shared<const Rule>(Rule{AllOf{std::move(children)}});
}

RulePtr MakeAnyOf(std::vector<RulePtr> children) {
  return std::make_shared<const Rule>(Rule{AnyOf{std::move(children)}});
}

RulePtr MakeNot(RulePtr child) {
  return std::make_shared<const Rule>(Rule{Not{std::move(child)}});
}

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

bool IsAsciiPunct(unsigned char c) { return c < 128 && std::ispunct(c); }

}  // namespace

int RuleDepth(const Rule &rule) {
  auto max_child = [](const std::vector<RulePtr> &cs) {
    int d = 0;
    for (const auto &c : cs) d = std::max(d, RuleDepth(*c));
    return d;
  };
  return 1 + std::visit(
                 Overloaded{
                     [](const NeighborRule &r) { return RuleDepth(*r.inner); },
                     [&](const AllOf &r) { return max_child(r.children); },
                     [&](const AnyOf &r) { return max_child(r.children); },
                     [](const Not &r) { return RuleDepth(*r.child); },
                     [](const auto &) { return 0; },
                 },
                 rule.node);
}

std::string NormalizeKeyword(const std::string &text) {
  std::size_t b = 0, e = text.size();
  while (b < e && IsAsciiPunct(static_cast<unsigned char>(text[b]))) ++b;
  while (e > b && IsAsciiPunct(static_cast<unsigned char>(text[e - 1]))) --e;
  std::string out = text.substr(b, e - b);
  for (auto &c : out)
    if (static_cast<unsigned char>(c) < 128)
      c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

namespace {

bool KeywordMatch(const KeywordRule &r, const std::string &text) {
  std::string key = NormalizeKeyword(text);
  if (key.empty()) return false;
  if (r.mode == MatchMode::kExact) return r.lexicon.count(key) > 0;
  for (std::size_t len = 1; len <= key.size(); ++len)
    if (r.lexicon.count(key.substr(0, len))) return true;
  return false;
}

bool InRegion(const NormBBox &region, const NormBBox &box) {
  double cx = box.CenterX(), cy = box.CenterY();
  return cx >= region.x0 && cx <= region.x1 && cy >= region.y0 && cy <= region.y1;
}

}  // namespace

bool EvaluateRule(const Rule &rule, const TokenContext &ctx) {
  return std::visit(
      Overloaded{
          [&](const RegexRule &r) {
            return std::regex_search(ctx.Anchor().text, *r.compiled);
          },
          [&](const KeywordRule &r) { return KeywordMatch(r, ctx.Anchor().text); },
          [&](const RegionRule &r) { return InRegion(r.region, ctx.Box()); },
          [&](const NeighborRule &r) {
            // neighbors are sorted by distance, so the first hit is nearest
            for (const auto &e : ctx.neighbors) {
              if (e.direction != r.direction) continue;
              TokenContext nctx = ContextOf(ctx.layout, e.token, ctx.params);
              return EvaluateRule(*r.inner, nctx);
            }
            return false;
          },
          [&](const AllOf &r) {
            return std::all_of(r.children.begin(), r.children.end(),
                               [&](const RulePtr &c) { return EvaluateRule(*c, ctx); });
          },
          [&](const AnyOf &r) {
            return std::any_of(r.children.begin(), r.children.end(),
                               [&](const RulePtr &c) { return EvaluateRule(*c, ctx); });
          },
          [&](const Not &r) { return !EvaluateRule(*r.child, ctx); },
      },
      rule.node);
}

ClassId ApplyLf(const LabelingFunction &lf, const TokenContext &context) {
  return EvaluateRule(*lf.rule, context) ? lf.attached_class : kAbstain;
}

// ---------------------------------------------------------------------------
// Suite format

namespace {

double RegionField(const json &j, const char *key, const std::string &where) {
  if (!j.contains(key) || !j[key].is_number())
    throw ValidationError(where + ": region field '" + key + "' must be a number");
  double v = j[key].get<double>();
  if (v < 0 || v > 1)
    throw ValidationError(where + ": region field '" + key + "' outside [0, 1]");
  return v;
}

RulePtr ParseRule(const json &j, int depth, const std::string &where) {
  if (depth > kMaxRuleDepth)
    throw ValidationError(where + ": rule depth exceeds " +
                          std::to_string(kMaxRuleDepth));
  if (!j.is_object() || !j.contains("type") || !j["type"].is_string())
    throw ValidationError(where + ": rule must be an object with a 'type'");
  const std::string type = j["type"].get<std::string>();
  auto children = [&](const char *key) {
    if (!j.contains(key) || !j[key].is_array() || j[key].empty())
      throw ValidationError(where + ": '" + type + "' needs a non-empty '" + key + "'");
    std::vector<RulePtr> out;
    for (const auto &c : j[key]) out.push_back(ParseRule(c, depth + 1, where));
    return out;
  };
  auto child = [&](const char *key) {
    if (!j.contains(key))
      throw ValidationError(where + ": '" + type + "' needs '" + key + "'");
    return ParseRule(j[key], depth + 1, where);
  };

  if (type == "regex") {
    if (!j.contains("pattern") || !j["pattern"].is_string())
      throw ValidationError(where + ": regex rule needs a string 'pattern'");
    try {
      return MakeRegex(j["pattern"].get<std::string>());
    } catch (const ValidationError &e) {
      throw ValidationError(where + ": " + e.what());
    }
  }
  if (type == "keyword") {
    if (!j.contains("lexicon") || !j["lexicon"].is_array())
      throw ValidationError(where + ": keyword rule needs a 'lexicon' array");
    std::vector<std::string> words;
    for (const auto &w : j["lexicon"]) {
      if (!w.is_string())
        throw ValidationError(where + ": lexicon entries must be strings");
      words.push_back(w.get<std::string>());
    }
    std::string mode = j.value("match", std::string("exact"));
    if (mode != "exact" && mode != "prefix")
      throw ValidationError(where + ": match must be 'exact' or 'prefix'");
    return MakeKeyword(words, mode == "prefix" ? MatchMode::kPrefix : MatchMode::kExact);
  }
  if (type == "region") {
    NormBBox r{RegionField(j, "x0", where), RegionField(j, "y0", where),
               RegionField(j, "x1", where), RegionField(j, "y1", where)};
    if (r.x0 > r.x1 || r.y0 > r.y1)
      throw ValidationError(where + ": region has x0 > x1 or y0 > y1");
    return MakeRegion(r);
  }
  if (type == "neighbor") {
    auto dir = ParseDirection(j.value("direction", std::string()));
    if (!dir)
      throw ValidationError(where + ": neighbor direction must be left/right/above/below");
    return MakeNeighbor(*dir, child("rule"));
  }
  if (type == "all_of") return MakeAllOf(children("children"));
  if (type == "any_of") return MakeAnyOf(children("children"));
  if (type == "not") return MakeNot(child("rule"));
  throw ValidationError(where + ": unknown rule type '" + type + "'");
}

json RuleToJson(const Rule &rule) {
  auto list = [](const std::vector<RulePtr> &cs) {
    json a = json::array();
    for (const auto &c : cs) a.push_back(RuleToJson(*c));
    return a;
  };
  return std::visit(
      Overloaded{
          [](const RegexRule &r) { return json{{"type", "regex"}, {"pattern", r.pattern}}; },
          [](const KeywordRule &r) {
            return json{{"type", "keyword"},
                        {"lexicon", r.lexicon},
                        {"match", r.mode == MatchMode::kPrefix ? "prefix" : "exact"}};
          },
          [](const RegionRule &r) {
            return json{{"type", "region"}, {"x0", r.region.x0}, {"y0", r.region.y0},
                        {"x1", r.region.x1}, {"y1", r.region.y1}};
          },
          [](const NeighborRule &r) {
            return json{{"type", "neighbor"},
                        {"direction", DirectionName(r.direction)},
                        {"rule", RuleToJson(*r.inner)}};
          },
          [&](const AllOf &r) { return json{{"type", "all_of"}, {"children", list(r.children)}}; },
          [&](const AnyOf &r) { return json{{"type", "any_of"}, {"children", list(r.children)}}; },
          [](const Not &r) { return json{{"type", "not"}, {"rule", RuleToJson(*r.child)}}; },
      },
      rule.node);
}

}  // namespace

std::vector<LabelingFunction> ParseLfSuite(
    std::istream &in, const std::vector<std::string> &class_vocab) {
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception &e) {
    throw ValidationError(std::string("LF suite is not valid JSON: ") + e.what());
  }
  if (!j.is_array()) throw ValidationError("LF suite must be a JSON array");
  std::vector<LabelingFunction> out;
  std::unordered_set<std::string> ids;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const json &e = j[i];
    std::string where = "LF #" + std::to_string(i);
    if (!e.is_object() || !e.contains("id") || !e["id"].is_string())
      throw ValidationError(where + ": missing string 'id'");
    LabelingFunction lf;
    lf.id = e["id"].get<std::string>();
    where = "LF '" + lf.id + "'";
    if (!ids.insert(lf.id).second) throw ValidationError(where + ": duplicate id");
    if (!e.contains("class") || !e["class"].is_string())
      throw ValidationError(where + ": missing string 'class'");
    auto cls = e["class"].get<std::string>();
    auto it = std::find(class_vocab.begin(), class_vocab.end(), cls);
    if (it == class_vocab.end())
      throw ValidationError(where + ": unknown class '" + cls + "'");
    lf.attached_class = static_cast<ClassId>(it - class_vocab.begin()) + 1;
    if (!e.contains("rule")) throw ValidationError(where + ": missing 'rule'");
    lf.rule = ParseRule(e["rule"], 1, where);
    out.push_back(std::move(lf));
  }
  return out;
}

std::vector<LabelingFunction> ParseLfSuite(
    const std::string &text, const std::vector<std::string> &class_vocab) {
  std::istringstream in(text);
  return ParseLfSuite(in, class_vocab);
}

std::vector<LabelingFunction> LoadLfSuite(
    const std::string &path, const std::vector<std::string> &class_vocab) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open LF suite '" + path + "'");
  return ParseLfSuite(in, class_vocab);
}

void SerializeLfSuite(const std::vector<LabelingFunction> &lfs,
                      const std::vector<std::string> &class_vocab,
                      std::ostream &out) {
  json a = json::array();
  for (const auto &lf : lfs)
    a.push_back({{"id", lf.id},
                 {"class", class_vocab.at(static_cast<std::size_t>(lf.attached_class - 1))},
                 {"rule", RuleToJson(*lf.rule)}});
  out << a.dump(2) << '\n';
}

std::string SerializeLfSuite(const std::vector<LabelingFunction> &lfs,
                             const std::vector<std::string> &class_vocab) {
  std::ostringstream out;
  SerializeLfSuite(lfs, class_vocab, out);
  return out.str();
}

// ---------------------------------------------------------------------------
// Label matrix

bool LabelMatrix::RowFired(std::size_t i) const {
  const ClassId *r = Row(i);
  return std::any_of(r, r + n_lfs, [](ClassId v) { return v != kAbstain; });
}

LabelMatrix BuildLabelMatrix(const std::vector<LabelingFunction> &lfs,
                             const Corpus &corpus, const ContextParams &params) {
  if (lfs.empty()) throw ValidationError("no labeling functions");
  LabelMatrix m;
  m.n_lfs = lfs.size();
  m.classes = corpus.classes;
  for (const auto &lf : lfs) {
    m.attached.push_back(lf.attached_class);
    m.lf_ids.push_back(lf.id);
  }
  m.entries.reserve(corpus.NumTokens() * m.n_lfs);
  for (std::size_t d = 0; d < corpus.documents.size(); ++d) {
    const Document &doc = corpus.documents[d];
    m.doc_ids.push_back(doc.doc_id);
    auto layout = MakeLayout(doc);
    for (std::size_t t : layout->order) {
      TokenContext ctx = ContextOf(layout, t, params);
      for (const auto &lf : lfs) m.entries.push_back(ApplyLf(lf, ctx));
      m.instance_index.push_back({d, t});
    }
  }
  m.n_instances = m.instance_index.size();
  return m;
}

void WriteLabelMatrix(const LabelMatrix &m, std::ostream &out) {
  json lfs = json::array();
  for (std::size_t j = 0; j < m.n_lfs; ++j)
    lfs.push_back({{"id", m.lf_ids[j]}, {"class", m.attached[j]}});
  json header = {{"n", m.n_instances}, {"m", m.n_lfs}, {"lfs", lfs},
                 {"classes", m.classes}, {"docs", m.doc_ids}};
  out << header.dump() << '\n';
  for (std::size_t i = 0; i < m.n_instances; ++i) {
    out << m.instance_index[i].doc << ' ' << m.instance_index[i].token;
    for (std::size_t j = 0; j < m.n_lfs; ++j) out << ' ' << m.At(i, j);
    out << '\n';
  }
}

LabelMatrix ReadLabelMatrix(std::istream &in) {
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("label matrix: empty file");
  json h;
  try {
    h = json::parse(line);
  } catch (const json::exception &e) {
    throw ValidationError(std::string("label matrix header: ") + e.what());
  }
  LabelMatrix m;
  try {
    m.n_instances = h.at("n").get<std::size_t>();
    m.n_lfs = h.at("m").get<std::size_t>();
    m.classes = h.at("classes").get<std::vector<std::string>>();
    m.doc_ids = h.at("docs").get<std::vector<std::string>>();
    for (const auto &lf : h.at("lfs")) {
      m.lf_ids.push_back(lf.at("id").get<std::string>());
      m.attached.push_back(lf.at("class").get<ClassId>());
    }
  } catch (const json::exception &e) {
    throw ValidationError(std::string("label matrix header: ") + e.what());
  }
  if (m.lf_ids.size() != m.n_lfs)
    throw ValidationError("label matrix header: 'lfs' length differs from m");
  m.entries.reserve(m.n_instances * m.n_lfs);
  for (std::size_t i = 0; i < m.n_instances; ++i) {
    if (!std::getline(in, line))
      throw ValidationError("label matrix: expected " + std::to_string(m.n_instances) +
                            " rows, got " + std::to_string(i));
    std::istringstream row(line);
    InstanceRef ref;
    if (!(row >> ref.doc >> ref.token) || ref.doc >= m.doc_ids.size())
      throw ValidationError("label matrix row " + std::to_string(i) + ": bad instance index");
    m.instance_index.push_back(ref);
    for (std::size_t j = 0; j < m.n_lfs; ++j) {
      ClassId v;
      if (!(row >> v) || (v != kAbstain && v != m.attached[j]))
        throw ValidationError("label matrix row " + std::to_string(i) +
                              ": entry must be 0 or the LF's class");
      m.entries.push_back(v);
    }
  }
  return m;
}

LabelMatrix SelectRows(const LabelMatrix &matrix,
                       const std::vector<std::size_t> &rows) {
  LabelMatrix out = matrix;
  out.entries.clear();
  out.instance_index.clear();
  out.n_instances = rows.size();
  for (auto i : rows) {
    out.entries.insert(out.entries.end(), matrix.Row(i), matrix.Row(i) + matrix.n_lfs);
    out.instance_index.push_back(matrix.instance_index[i]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Diagnostics

LfDiagnostics Diagnostics(const LabelMatrix &matrix,
                          const std::vector<std::optional<ClassId>> *gold) {
  const std::size_t n = matrix.n_instances, m = matrix.n_lfs;
  if (gold && gold->size() != n)
    throw ValidationError("gold labels (" + std::to_string(gold->size()) +
                          ") do not align with matrix rows (" + std::to_string(n) + ")");
  LfDiagnostics d;
  d.n_instances = n;
  d.fires.assign(m, 0);
  d.coverage.assign(m, 0.0);
  d.precision.assign(m, std::nullopt);
  d.pairwise_overlap.assign(m * m, 0.0);
  std::vector<std::size_t> correct(m, 0), judged(m, 0), pair(m * m, 0);
  std::size_t overlap_rows = 0, conflict_rows = 0;
  std::vector<std::size_t> fired;
  for (std::size_t i = 0; i < n; ++i) {
    fired.clear();
    const ClassId *row = matrix.Row(i);
    for (std::size_t j = 0; j < m; ++j) {
      if (row[j] == kAbstain) continue;
      fired.push_back(j);
      ++d.fires[j];
      if (gold && (*gold)[i]) {
        ++judged[j];
        if (*(*gold)[i] == row[j]) ++correct[j];
      }
    }
    for (auto a : fired)
      for (auto b : fired) ++pair[a * m + b];
    if (fired.size() >= 2) {
      ++overlap_rows;
      for (auto j : fired)
        if (row[j] != row[fired.front()]) {
          ++conflict_rows;
          break;
        }
    }
  }
  if (n == 0) return d;
  const double dn = static_cast<double>(n);
  for (std::size_t j = 0; j < m; ++j) {
    d.coverage[j] = d.fires[j] / dn;
    if (judged[j] > 0) d.precision[j] = double(correct[j]) / double(judged[j]);
  }
  for (std::size_t k = 0; k < m * m; ++k) d.pairwise_overlap[k] = pair[k] / dn;
  d.overlap = overlap_rows / dn;
  d.conflict = conflict_rows / dn;
  return d;
}

namespace {

std::string Fixed(double v, int digits = 3) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

std::string ClassLabel(const LabelMatrix &m, ClassId k) {
  if (k >= 1 && static_cast<std::size_t>(k) <= m.classes.size())
    return m.classes[static_cast<std::size_t>(k - 1)];
  return std::to_string(k);
}

}  // namespace

std::vector<std::string> SilentLfs(const LabelMatrix &matrix,
                                   const LfDiagnostics &diag) {
  std::vector<std::string> out;
  for (std::size_t j = 0; j < matrix.n_lfs; ++j)
    if (diag.fires[j] == 0) out.push_back(matrix.lf_ids[j]);
  return out;
}

void PrintDiagnostics(const LabelMatrix &matrix, const LfDiagnostics &diag,
                      std::ostream &out) {
  std::size_t id_w = 2, cls_w = 5;
  for (std::size_t j = 0; j < matrix.n_lfs; ++j) {
    id_w = std::max(id_w, matrix.lf_ids[j].size());
    cls_w = std::max(cls_w, ClassLabel(matrix, matrix.attached[j]).size());
  }
  out << std::left << std::setw(int(id_w)) << "id" << "  " << std::setw(int(cls_w))
      << "class" << "  " << std::right << std::setw(8) << "coverage" << "  "
      << std::setw(9) << "precision" << "  " << std::setw(7) << "fires" << '\n';
  for (std::size_t j = 0; j < matrix.n_lfs; ++j) {
    out << std::left << std::setw(int(id_w)) << matrix.lf_ids[j] << "  "
        << std::setw(int(cls_w)) << ClassLabel(matrix, matrix.attached[j]) << "  "
        << std::right << std::setw(8) << Fixed(diag.coverage[j]) << "  "
        << std::setw(9) << (diag.precision[j] ? Fixed(*diag.precision[j]) : "-")
        << "  " << std::setw(7) << diag.fires[j] << '\n';
  }
  out << "instances " << diag.n_instances << '\n';
  out << "overlap   " << Fixed(diag.overlap) << '\n';
  out << "conflict  " << Fixed(diag.conflict) << '\n';
}

std::string DiagnosticsJson(const LabelMatrix &matrix, const LfDiagnostics &diag) {
  json rows = json::array();
  for (std::size_t j = 0; j < matrix.n_lfs; ++j) {
    json r = {{"id", matrix.lf_ids[j]},
              {"class", ClassLabel(matrix, matrix.attached[j])},
              {"coverage", diag.coverage[j]},
              {"fires", diag.fires[j]}};
    r["precision"] = diag.precision[j] ? json(*diag.precision[j]) : json(nullptr);
    rows.push_back(std::move(r));
  }
  json j = {{"instances", diag.n_instances}, {"lfs", rows},
            {"overlap", diag.overlap},       {"conflict", diag.conflict},
            {"pairwise_overlap", diag.pairwise_overlap}};
  return j.dump(2);
}

}  // namespace docws
