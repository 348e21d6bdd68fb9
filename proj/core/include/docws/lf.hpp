// docws/lf.hpp

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

#ifndef DOCWS_LF_HPP_
#define DOCWS_LF_HPP_

#include <iosfwd>
#include <memory>
#include <optional>
#include <regex>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "docws/document.hpp"

namespace docws {

enum class Direction { kLeft, kRight, kAbove, kBelow };

const char *DirectionName(Direction d);
std::optional<Direction> ParseDirection(const std::string &name);

struct ContextParams {
  int window = 1;       // reading-order neighbours on each side
  double radius = 0.1;  // normalized center distance cap
};

/// A context token seen from the anchor token.
struct ContextEntry {
  std::size_t token = 0;  // index into Document::tokens
  Direction direction = Direction::kRight;
  double distance = 0;  // normalized center distance
};

/// Per-document geometry shared by every context built on it.
struct DocLayout {
  const Document *doc = nullptr;
  std::vector<NormBBox> boxes;
  std::vector<std::size_t> order;     // reading order
  std::vector<std::size_t> position;  // inverse of order
};

std::shared_ptr<const DocLayout> MakeLayout(const Document &doc);

/// Anchor token plus its spatial neighbourhood.
struct TokenContext {
  std::shared_ptr<const DocLayout> layout;
  ContextParams params;
  std::size_t token = 0;
  std::vector<ContextEntry> neighbors;

  const Token &Anchor() const { return layout->doc->tokens[token]; }
  const NormBBox &Box() const { return layout->boxes[token]; }
};

/// Reading-order window plus radius neighbours, deduplicated, sorted by
/// (distance, token index). Direction follows the dominant axis of the
/// center displacement; |dx| == |dy| counts as horizontal.
TokenContext ContextOf(const Document &doc, std::size_t token_idx,
                       const ContextParams &params);
TokenContext ContextOf(std::shared_ptr<const DocLayout> layout,
                       std::size_t token_idx, const ContextParams &params);

// ---------------------------------------------------------------------------
// Rule trees

struct Rule;
using RulePtr = std::shared_ptr<const Rule>;

/// Unanchored search unless the pattern anchors itself (ECMAScript syntax).
struct RegexRule {
  std::string pattern;
  std::shared_ptr<const std::regex> compiled;
};

enum class MatchMode { kExact, kPrefix };

/// Lexicon entries and token text are both lowercased and stripped of
/// leading/trailing ASCII punctuation before comparison.
struct KeywordRule {
  std::set<std::string> lexicon;
  MatchMode mode = MatchMode::kExact;
};

/// True when the token center falls inside the region (bounds inclusive).
struct RegionRule {
  NormBBox region;
};

/// Applies `inner` to the nearest context token in `direction`; false when
/// there is none.
struct NeighborRule {
  Direction direction = Direction::kRight;
  RulePtr inner;
};

struct AllOf {
  std::vector<RulePtr> children;
};
struct AnyOf {
  std::vector<RulePtr> children;
};
struct Not {
  RulePtr child;
};

struct Rule {
  std::variant<RegexRule, KeywordRule, RegionRule, NeighborRule, AllOf, AnyOf,
               Not>
      node;
};

inline constexpr int kMaxRuleDepth = 8;

RulePtr MakeRegex(const std::string &pattern);
RulePtr MakeKeyword(const std::vector<std::string> &words,
                    MatchMode mode = MatchMode::kExact);
RulePtr MakeRegion(NormBBox region);
RulePtr MakeNeighbor(Direction direction, RulePtr inner);
RulePtr MakeAllOf(std::vector<RulePtr> children);
RulePtr MakeAnyOf(std::vector<RulePtr> children);
RulePtr MakeNot(RulePtr child);

int RuleDepth(const Rule &rule);

/// Lowercase (ASCII) and strip leading/trailing ASCII punctuation.
std::string NormalizeKeyword(const std::string &text);

/// Evaluates against the context's anchor token. Nested neighbour rules
/// build the neighbour's own context on demand with the same parameters.
bool EvaluateRule(const Rule &rule, const TokenContext &context);

struct LabelingFunction {
  std::string id;
  ClassId attached_class = 1;
  RulePtr rule;
};

/// Parses the JSON suite format: [{"id", "class", "rule"}, ...].
std::vector<LabelingFunction> ParseLfSuite(
    std::istream &in, const std::vector<std::string> &class_vocab);
std::vector<LabelingFunction> ParseLfSuite(
    const std::string &text, const std::vector<std::string> &class_vocab);
std::vector<LabelingFunction> LoadLfSuite(
    const std::string &path, const std::vector<std::string> &class_vocab);

void SerializeLfSuite(const std::vector<LabelingFunction> &lfs,
                      const std::vector<std::string> &class_vocab,
                      std::ostream &out);
std::string SerializeLfSuite(const std::vector<LabelingFunction> &lfs,
                             const std::vector<std::string> &class_vocab);

/// Returns lf.attached_class when the rule holds, else kAbstain.
ClassId ApplyLf(const LabelingFunction &lf, const TokenContext &context);

// ---------------------------------------------------------------------------
// Label matrix

struct LabelMatrix {
  std::size_t n_instances = 0;
  std::size_t n_lfs = 0;
  std::vector<ClassId> entries;   // row-major n_instances x n_lfs
  std::vector<ClassId> attached;  // per LF
  std::vector<std::string> lf_ids;
  std::vector<std::string> classes;
  std::vector<std::string> doc_ids;
  std::vector<InstanceRef> instance_index;

  ClassId At(std::size_t i, std::size_t j) const {
    return entries[i * n_lfs + j];
  }
  const ClassId *Row(std::size_t i) const { return entries.data() + i * n_lfs; }
  bool RowFired(std::size_t i) const;
};

/// Rows in corpus order, then reading order within each document.
LabelMatrix BuildLabelMatrix(const std::vector<LabelingFunction> &lfs,
                             const Corpus &corpus, const ContextParams &params);

/// Integer-only text format: a JSON header line then one row per instance,
/// "<doc index> <token index> l_1 ... l_m".
void WriteLabelMatrix(const LabelMatrix &matrix, std::ostream &out);
LabelMatrix ReadLabelMatrix(std::istream &in);

/// Sub-matrix of the given rows, in the given order.
LabelMatrix SelectRows(const LabelMatrix &matrix,
                       const std::vector<std::size_t> &rows);

// ---------------------------------------------------------------------------
// Diagnostics (standard data-programming definitions)

struct LfDiagnostics {
  std::size_t n_instances = 0;
  std::vector<std::size_t> fires;
  std::vector<double> coverage;
  std::vector<std::optional<double>> precision;  // absent: no gold or never fired
  double overlap = 0;   // rows with >= 2 firings
  double conflict = 0;  // rows with >= 2 distinct fired classes
  std::vector<double> pairwise_overlap;  // m x m, row-major
};

LfDiagnostics Diagnostics(const LabelMatrix &matrix,
                          const std::vector<std::optional<ClassId>> *gold);

void PrintDiagnostics(const LabelMatrix &matrix, const LfDiagnostics &diag,
                      std::ostream &out);
std::string DiagnosticsJson(const LabelMatrix &matrix, const LfDiagnostics &diag);

/// Ids of LFs with zero coverage, for the report warning.
std::vector<std::string> SilentLfs(const LabelMatrix &matrix,
                                   const LfDiagnostics &diag);

}  // namespace docws

#endif  // DOCWS_LF_HPP_
