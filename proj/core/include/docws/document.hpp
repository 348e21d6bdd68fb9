// docws/document.hpp

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

#ifndef DOCWS_DOCUMENT_HPP_
#define DOCWS_DOCUMENT_HPP_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace docws {

/// Class index 0 is ABSTAIN; gold labels live in 1..K.
using ClassId = int;
inline constexpr ClassId kAbstain = 0;

/// Page-pixel box, origin at the top-left corner.
struct BBox {
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  bool operator==(const BBox &) const = default;
};

/// Box divided by page dimensions; every field in [0, 1].
struct NormBBox {
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  double CenterX() const { return 0.5 * (x0 + x1); }
  double CenterY() const { return 0.5 * (y0 + y1); }
  bool operator==(const NormBBox &) const = default;
};

struct Token {
  std::string text;
  BBox bbox;
  std::optional<ClassId> gold_label;
  bool operator==(const Token &) const = default;
};

struct Document {
  std::string doc_id;
  double page_width = 0;
  double page_height = 0;
  std::vector<Token> tokens;
  bool operator==(const Document &) const = default;
};

/// A parsed corpus file: the class vocabulary from the header line plus the
/// documents in file order. classes[k - 1] names class k.
struct Corpus {
  std::vector<std::string> classes;
  std::vector<Document> documents;

  int NumClasses() const { return static_cast<int>(classes.size()); }
  std::optional<ClassId> ClassIndex(const std::string &name) const;
  const std::string &ClassName(ClassId k) const;
  std::size_t NumTokens() const;
  bool operator==(const Corpus &) const = default;
};

/// Reads the newline-delimited corpus format. Blank lines are skipped; the
/// first record must be the {"classes": [...]} header. Throws
/// ValidationError naming the line and field on malformed input.
Corpus ParseDocuments(std::istream &in);
Corpus ParseDocuments(const std::string &text);
Corpus LoadCorpus(const std::string &path);

void SerializeCorpus(const Corpus &corpus, std::ostream &out);
std::string SerializeCorpus(const Corpus &corpus);

/// Checks every Document/Token/BBox invariant; throws ValidationError.
void ValidateCorpus(const Corpus &corpus);

NormBBox NormalizeBBox(const BBox &bbox, double page_width, double page_height);

/// Token permutation sorted by (line bucket of y0, x0). The bucket height is
/// the median token height of the document; ties keep file order.
std::vector<std::size_t> ReadingOrder(const Document &doc);

/// One token of the corpus. Instances are numbered in corpus order, then
/// reading order within each document.
struct InstanceRef {
  std::size_t doc = 0;
  std::size_t token = 0;
  bool operator==(const InstanceRef &) const = default;
};

std::vector<InstanceRef> EnumerateInstances(const Corpus &corpus);

struct SplitFractions {
  double labeled = 0;
  double validation = 0;
  double test = 0;
};

struct SplitCounts {
  std::size_t labeled = 0;
  std::size_t validation = 0;
  std::size_t test = 0;
};

/// Document-granular partition. The *_docs lists hold document indices in
/// assignment order; the instance lists hold instance indices (see
/// EnumerateInstances) in ascending order.
struct CorpusSplit {
  std::vector<std::size_t> labeled_docs, unlabeled_docs, validation_docs,
      test_docs;
  std::vector<std::size_t> labeled, unlabeled, validation, test;
  std::uint64_t seed = 0;
  SplitFractions fractions;
};

/// Number of documents a fraction maps to: round(f * n), at least one when
/// f > 0.
std::size_t FractionToCount(double fraction, std::size_t n);

CorpusSplit SplitCorpus(const Corpus &corpus, SplitFractions fractions,
                        std::uint64_t seed);
CorpusSplit SplitCorpus(const Corpus &corpus, SplitCounts counts,
                        std::uint64_t seed);

/// Recomputes the instance lists of a split from its *_docs lists.
void FillInstances(const Corpus &corpus, CorpusSplit &split);

/// Keeps the first max_docs unlabeled documents (in assignment order) and
/// drops the rest from the split entirely.
CorpusSplit RestrictUnlabeled(const Corpus &corpus, const CorpusSplit &split,
                              std::size_t max_docs);

/// Gold labels per instance as the trainer may see them: unlabeled and
/// dropped instances are stripped to nullopt.
std::vector<std::optional<ClassId>> TrainingLabelView(
    const Corpus &corpus, const std::vector<InstanceRef> &instances,
    const CorpusSplit &split);

/// Gold labels per instance, unstripped (for scoring).
std::vector<std::optional<ClassId>> GoldLabels(
    const Corpus &corpus, const std::vector<InstanceRef> &instances);

void WriteSplitManifest(const Corpus &corpus, const CorpusSplit &split,
                        std::ostream &out);
CorpusSplit ReadSplitManifest(const Corpus &corpus, std::istream &in);

}  // namespace docws

#endif  // DOCWS_DOCUMENT_HPP_
