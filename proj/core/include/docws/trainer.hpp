// docws/trainer.hpp

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

// Joint training of the feature model (phi) and the label model (theta).
//
// Each step minimizes
//
//   w_ce * CE(batch_L) + w_gm * NLL(batch_U restricted to unlabeled rows)
//     + w_kl * KL(P_phi(y|x) || P_theta(y|l)) over batch_U - w_qg * R(theta)
//
// where CE, NLL and KL are batch means and R is the quality guide. batch_L is
// drawn from labeled instances, batch_U from labeled and unlabeled instances
// on which at least one LF fired. Both parameter sets take one Adam step.

#ifndef DOCWS_TRAINER_HPP_
#define DOCWS_TRAINER_HPP_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "docws/cage.hpp"
#include "docws/document.hpp"
#include "docws/features.hpp"
#include "docws/io.hpp"
#include "docws/lf.hpp"

namespace docws {

struct TrainConfig {
  double learning_rate = 5e-3;
  std::size_t batch_size = 16;
  std::size_t max_epochs = 5;
  double warmup_fraction = 0.1;
  std::size_t patience = 2;
  double w_ce = 1.0, w_gm = 1.0, w_kl = 1.0, w_qg = 1.0;
  double guide_clamp = kBeliefClamp;
  std::uint64_t seed = 0;
  double adam_beta1 = 0.9, adam_beta2 = 0.999, adam_eps = 1e-8;
  double l2 = kDefaultL2;
  int hash_bits = kDefaultHashBits;
  ContextParams context;

  /// Baseline mode: only the supervised cross-entropy term.
  void SetSupervisedOnly() { w_gm = w_kl = w_qg = 0.0; }
  bool SupervisedOnly() const { return w_gm == 0 && w_kl == 0 && w_qg == 0; }
  void Validate() const;
};

/// Applies one key; returns false for keys TrainConfig does not own.
bool ApplyTrainKey(TrainConfig &config, const KeyValue &kv);
TrainConfig TrainConfigFrom(const std::vector<KeyValue> &kvs, TrainConfig base = {});
std::string FormatTrainConfig(const TrainConfig &config);

/// lr * min(1, step / max(1, ceil(warmup_fraction * total_steps))), step
/// counted from 1.
double WarmupLearningRate(const TrainConfig &config, std::size_t step,
                          std::size_t total_steps);

struct AdamState {
  std::vector<double> m_phi, v_phi;  // weights then bias
  std::vector<double> m_theta, v_theta;
  std::size_t step = 0;
  // scratch gradients, reused across steps
  PhiParams grad_phi;
  ThetaGrad grad_theta;

  AdamState() = default;
  AdamState(const PhiParams &phi, const ThetaParams &theta);
};

/// One bias-corrected Adam update of params given grad; `step` is the
/// 1-based update count.
void AdamUpdate(std::span<double> params, std::span<const double> grad,
                std::span<double> m, std::span<double> v, double lr, std::size_t step,
                double beta1, double beta2, double eps);

/// Per-LF validation precision; 0.5 where the LF never fires; clamped to
/// [eps, 1 - eps].
QualityBeliefs EstimateQualityBeliefs(const LabelMatrix &matrix_v,
                                      std::span<const ClassId> gold_v, double eps);

struct LossBreakdown {
  double ce = 0, gm = 0, kl = 0, qg = 0, total = 0;
};

struct WeakExample {
  const FeatureVector *features = nullptr;
  std::span<const ClassId> lf_row;
  bool unlabeled = false;  // enters the NLL term
};

LossBreakdown JointStep(PhiParams &phi, ThetaParams &theta,
                        std::span<const LabeledExample> batch_l,
                        std::span<const WeakExample> batch_u,
                        const QualityBeliefs &beliefs, const TrainConfig &config,
                        double learning_rate, AdamState &adam);

/// Loss and gradients of one step without the parameter update.
LossBreakdown JointObjective(const PhiParams &phi, const ThetaParams &theta,
                             std::span<const LabeledExample> batch_l,
                             std::span<const WeakExample> batch_u,
                             const QualityBeliefs &beliefs, const TrainConfig &config,
                             PhiParams *grad_phi, ThetaGrad *grad_theta);

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double ce = 0, gm = 0, kl = 0, qg = 0, total = 0;
  double val_f1 = 0;
};

struct TrainedModel {
  PhiParams phi;
  ThetaParams theta;
  std::vector<std::string> classes;
  std::vector<LabelingFunction> lfs;
  TrainConfig config;
  QualityBeliefs beliefs;
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;  // index into history
};

/// Everything the trainer reads, aligned by instance index.
struct TrainingInputs {
  const LabelMatrix *matrix = nullptr;
  std::span<const FeatureVector> features;
  /// Gold labels as visible to training (unlabeled instances stripped).
  std::span<const std::optional<ClassId>> labels;
  const CorpusSplit *split = nullptr;
  std::vector<std::string> classes;
  std::vector<LabelingFunction> lfs;
};

TrainedModel Train(const TrainingInputs &inputs, const TrainConfig &config);

struct TokenPrediction {
  ClassId label = 1;
  ClassDistribution dist;
};

TokenPrediction PredictToken(const TrainedModel &model, const FeatureVector &fv);

/// Extension: averages the feature-model and label-model posteriors when at
/// least one LF fired on the token; otherwise identical to PredictToken.
TokenPrediction PredictTokenFused(const TrainedModel &model, const FeatureVector &fv,
                                  std::span<const ClassId> lf_row);

/// Model bundle directory: theta.json, phi.json, lfs.json, config.txt,
/// history.tsv.
void WriteBundle(const TrainedModel &model, const std::filesystem::path &dir);
TrainedModel ReadBundle(const std::filesystem::path &dir);
std::string FormatHistory(const std::vector<EpochRecord> &history);

}  // namespace docws

#endif  // DOCWS_TRAINER_HPP_
