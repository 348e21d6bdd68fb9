// docws/synth.hpp

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

// Synthetic receipt-like corpora with known labels, LF suites tuned to
// coverage/precision targets, and the labeled/unlabeled sweep harness.

#ifndef DOCWS_SYNTH_HPP_
#define DOCWS_SYNTH_HPP_

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "docws/document.hpp"
#include "docws/io.hpp"
#include "docws/lf.hpp"
#include "docws/trainer.hpp"

namespace docws {

enum class TemplateKind { kWord, kPrice, kCode };

struct ClassTemplate {
  std::string name;
  TemplateKind kind = TemplateKind::kWord;
  std::size_t vocab = 50;  // distinct surface forms (word/code templates)
  double weight = 1.0;     // relative token frequency
  NormBBox region{0, 0, 1, 1};
};

enum class LfKind { kKeyword, kRegex, kRegion, kNeighbor };

struct LfSpec {
  ClassId cls = 1;
  LfKind kind = LfKind::kKeyword;
  double coverage = 0.1;   // fraction of all tokens the LF fires on
  double precision = 0.9;  // fraction of firings that hit cls
};

struct SynthSpec {
  std::size_t n_documents = 500;
  std::size_t tokens_min = 12, tokens_max = 30;
  std::vector<ClassTemplate> classes;
  std::vector<LfSpec> lfs;
  double noise = 0.02;  // per-token template corruption rate
  std::uint64_t seed = 0;

  /// Menu / Dish / Price receipts with 8 LFs at precision 0.7 to 0.95.
  static SynthSpec Default();
  void Validate() const;
};

/// Flat config keys: n_documents, tokens_min, tokens_max, noise, seed and
/// repeated
///   class = <name> template=word|price|code vocab=N weight=W region=x0,y0,x1,y1
///   lf = <class name> kind=keyword|regex|region|neighbor coverage=C precision=P
/// Any class (lf) line replaces the default class (lf) list.
/// Unknown keys go to `unknown` when given, otherwise they are an error.
SynthSpec SynthSpecFrom(const std::vector<KeyValue> &kvs, SynthSpec base = SynthSpec::Default(),
                        std::vector<KeyValue> *unknown = nullptr);
std::string FormatSynthSpec(const SynthSpec &spec);

inline constexpr double kTargetTolerance = 0.1;
inline constexpr int kMaxTargetRetries = 50;

struct SynthData {
  Corpus corpus;
  std::vector<LabelingFunction> lfs;
  std::vector<double> coverage, precision;  // achieved, per LF
};

/// Deterministic per spec.seed. Throws ValidationError when an LF target is
/// still missed by more than kTargetTolerance after kMaxTargetRetries.
SynthData Generate(const SynthSpec &spec, const ContextParams &params = {});

// ---------------------------------------------------------------------------
// Sweeps

struct SweepConfig {
  std::vector<double> labeled_fractions{0.01, 0.05, 0.10};
  std::vector<double> unlabeled_fractions{0.90};
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  // Held out per seed before L and U are drawn; L% and U% count documents
  // of the remaining training pool.
  double validation_fraction = 0.1;
  double test_fraction = 0.2;
  TrainConfig train = DefaultSweepTrainConfig();

  static TrainConfig DefaultSweepTrainConfig();
};

/// Sweep keys: labeled (repeatable), unlabeled (repeatable), seeds (comma
/// list), validation_fraction, test_fraction. Other keys go to `unknown`.
SweepConfig SweepConfigFrom(const std::vector<KeyValue> &kvs, SweepConfig base,
                            std::vector<KeyValue> *unknown);

struct SweepCell {
  double labeled = 0, unlabeled = 0;
  std::uint64_t seed = 0;
  std::size_t labeled_docs = 0, unlabeled_docs = 0;
  double baseline_f1 = 0, joint_f1 = 0;
  bool operator==(const SweepCell &) const = default;
};

struct SweepResult {
  std::vector<SweepCell> cells;  // labeled-major, then unlabeled, then seed
};

/// Per-seed document partition: test, then validation, then the training
/// pool, from one shuffle. Labeled documents are a prefix of the pool and
/// unlabeled ones follow, so smaller L and U sets nest inside larger ones.
CorpusSplit SweepSplit(const Corpus &corpus, double labeled, double unlabeled,
                       double validation, double test, std::uint64_t seed);

struct SweepFixture;  // one generated corpus with its features and matrix

/// Trains baseline and joint mode on one (L, U) cell of a generated corpus.
SweepCell RunCell(const SweepFixture &fixture, double labeled, double unlabeled,
                  const SweepConfig &config);

/// Corpus seed for sweep seed s is spec.seed + s. `progress`, when set, is
/// called after each cell.
SweepResult RunSweep(const SynthSpec &spec, const SweepConfig &config,
                     const std::function<void(const SweepCell &)> &progress = {});

std::string SweepJson(const SweepResult &result);
/// One block per U: rows L%, columns baseline / joint / delta, means over
/// seeds, plus the count of seeds where joint beat baseline.
std::string FormatSweepTable(const SweepResult &result);

struct SweepFixture {
  SynthData data;
  std::vector<InstanceRef> instances;
  std::vector<FeatureVector> features;
  LabelMatrix matrix;
  std::uint64_t seed = 0;

  static SweepFixture Make(const SynthSpec &spec, std::uint64_t seed,
                           const TrainConfig &train);
};

}  // namespace docws

#endif  // DOCWS_SYNTH_HPP_
