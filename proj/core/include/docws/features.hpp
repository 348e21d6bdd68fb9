// docws/features.hpp

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

// Token featurizer and linear softmax classifier.

#ifndef DOCWS_FEATURES_HPP_
#define DOCWS_FEATURES_HPP_

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "docws/cage.hpp"
#include "docws/lf.hpp"

namespace docws {

inline constexpr std::size_t kDenseDim = 8;
inline constexpr int kDefaultHashBits = 18;

/// Dense block, in order: center x, center y, width, height (all
/// page-normalized), log(1 + byte count), digit, uppercase and punctuation
/// fractions. Sparse block: sorted unique indices of binary hashed features.
struct FeatureVector {
  std::array<double, kDenseDim> dense{};
  std::vector<std::uint32_t> sparse;
  bool operator==(const FeatureVector &) const = default;
};

// Hash seeds, one per sparse feature family.
enum class FeatureFamily : std::uint64_t {
  kWord = 11,
  kShape = 12,
  kTrigram = 13,
  kLeftWord = 14,
  kRightWord = 15,
};

/// FNV-1a over the bytes, started from a family-specific offset and passed
/// through the splitmix64 finalizer.
std::uint64_t HashFeature(FeatureFamily family, std::string_view text);

/// Letters -> x/X, digits -> 9, everything else -> #, runs collapsed.
std::string WordShape(std::string_view text);

FeatureVector Featurize(const TokenContext &context, int hash_bits = kDefaultHashBits);

/// Features for every instance of the corpus, in EnumerateInstances order.
std::vector<FeatureVector> FeaturizeCorpus(const Corpus &corpus,
                                           const ContextParams &params,
                                           int hash_bits = kDefaultHashBits);

/// Row r of `weights` (r < kDenseDim: dense feature r; otherwise hashed
/// index r - kDenseDim) holds one weight per class.
struct PhiParams {
  int hash_bits = kDefaultHashBits;
  int n_classes = 0;
  std::vector<double> weights;  // (kDenseDim + 2^hash_bits) x n_classes
  std::vector<double> bias;     // n_classes

  PhiParams() = default;
  PhiParams(int hash_bits, int num_classes);

  std::size_t Rows() const { return kDenseDim + (std::size_t{1} << hash_bits); }
  std::size_t Size() const { return weights.size() + bias.size(); }
  void SetZero();
};

std::vector<double> Logits(const PhiParams &phi, const FeatureVector &fv);
ClassDistribution Forward(const PhiParams &phi, const FeatureVector &fv);

/// argmax, ties broken toward the lowest class index.
ClassId ArgMax(const ClassDistribution &dist);
ClassId Predict(const PhiParams &phi, const FeatureVector &fv);

struct LabeledExample {
  const FeatureVector *features = nullptr;
  ClassId gold = 1;
};

inline constexpr double kDefaultL2 = 1e-5;

/// Adds scale * d(logits-loss)/d(phi) for one example into grad.
void AccumulateLogitGrad(const FeatureVector &fv, std::span<const double> d_logits,
                         double scale, PhiParams &grad);

/// Mean cross-entropy over the batch plus (l2 / 2) * ||weights||^2 (bias not
/// regularized). When grad is non-null, adds grad_scale times the gradient
/// into it.
double CrossEntropy(const PhiParams &phi, std::span<const LabeledExample> batch,
                    double l2, PhiParams *grad, double grad_scale = 1.0);

struct CeResult {
  double loss = 0;
  PhiParams grad;
};

CeResult CeLossAndGrad(const PhiParams &phi, std::span<const LabeledExample> batch,
                       double l2 = kDefaultL2);

inline constexpr double kTargetFloor = 1e-9;

struct KlResult {
  double kl = 0;
  std::vector<double> d_logits;      // dKL / d feature-model logits
  std::vector<double> d_log_target;  // dKL / d log target (0 where floored)
};

/// KL(Forward(phi, fv) || target) with the target floored at 1e-9.
KlResult KlGradAndValue(const PhiParams &phi, const FeatureVector &fv,
                        const ClassDistribution &target);

/// Snapshot file: {version, hash_bits, dense_dim, classes,
/// weights: [[row, [K values]], ...] (non-zero rows only), bias}.
void WritePhi(const PhiParams &phi, const std::vector<std::string> &classes,
              std::ostream &out);
PhiParams ReadPhi(std::istream &in, const std::vector<std::string> &classes);

}  // namespace docws

#endif  // DOCWS_FEATURES_HPP_
