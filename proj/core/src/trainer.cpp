// core/src/trainer.cpp

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

#include "docws/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "docws/errors.hpp"
#include "docws/eval.hpp"
#include "docws/seed.hpp"

namespace docws {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Config

void TrainConfig::Validate() const {
  if (!(learning_rate > 0)) throw ValidationError("learning_rate must be > 0");
  if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
  if (max_epochs < 1) throw ValidationError("max_epochs must be >= 1");
  if (!(warmup_fraction >= 0 && warmup_fraction <= 1))
    throw ValidationError("warmup_fraction must lie in [0, 1]");
  for (double w : {w_ce, w_gm, w_kl, w_qg})
    if (!(w >= 0)) throw ValidationError("loss weights must be >= 0");
  if (!(guide_clamp > 0 && guide_clamp < 0.5))
    throw ValidationError("guide_clamp must lie in (0, 0.5)");
  if (!(l2 >= 0)) throw ValidationError("l2 must be >= 0");
  if (hash_bits < 1 || hash_bits > 28) throw ValidationError("hash_bits must lie in [1, 28]");
  if (context.window < 0) throw ValidationError("window must be >= 0");
  if (!(context.radius >= 0 && context.radius <= std::sqrt(2.0)))
    throw ValidationError("radius must lie in [0, sqrt(2)]");
}

bool ApplyTrainKey(TrainConfig &c, const KeyValue &kv) {
  const std::string &k = kv.key;
  auto count = [&] {
    long long v = ParseInt(kv);
    if (v < 0) throw ValidationError("'" + k + "' must be >= 0");
    return static_cast<std::size_t>(v);
  };
  if (k == "learning_rate") c.learning_rate = ParseDouble(kv);
  else if (k == "batch_size") c.batch_size = count();
  else if (k == "max_epochs") c.max_epochs = count();
  else if (k == "warmup_fraction") c.warmup_fraction = ParseDouble(kv);
  else if (k == "patience") c.patience = count();
  else if (k == "w_ce") c.w_ce = ParseDouble(kv);
  else if (k == "w_gm") c.w_gm = ParseDouble(kv);
  else if (k == "w_kl") c.w_kl = ParseDouble(kv);
  else if (k == "w_qg") c.w_qg = ParseDouble(kv);
  else if (k == "guide_clamp") c.guide_clamp = ParseDouble(kv);
  else if (k == "seed") c.seed = static_cast<std::uint64_t>(ParseInt(kv));
  else if (k == "adam_beta1") c.adam_beta1 = ParseDouble(kv);
  else if (k == "adam_beta2") c.adam_beta2 = ParseDouble(kv);
  else if (k == "adam_eps") c.adam_eps = ParseDouble(kv);
  else if (k == "l2") c.l2 = ParseDouble(kv);
  else if (k == "hash_bits") c.hash_bits = static_cast<int>(ParseInt(kv));
  else if (k == "window") c.context.window = static_cast<int>(ParseInt(kv));
  else if (k == "radius") c.context.radius = ParseDouble(kv);
  else return false;
  return true;
}

TrainConfig TrainConfigFrom(const std::vector<KeyValue> &kvs, TrainConfig base) {
  for (const auto &kv : kvs)
    if (!ApplyTrainKey(base, kv))
      throw ValidationError("config line " + std::to_string(kv.line) + ": unknown key '" +
                            kv.key + "'");
  base.Validate();
  return base;
}

std::string FormatTrainConfig(const TrainConfig &c) {
  std::ostringstream o;
  o << "learning_rate = " << FormatDouble(c.learning_rate) << '\n'
    << "batch_size = " << c.batch_size << '\n'
    << "max_epochs = " << c.max_epochs << '\n'
    << "warmup_fraction = " << FormatDouble(c.warmup_fraction) << '\n'
    << "patience = " << c.patience << '\n'
    << "w_ce = " << FormatDouble(c.w_ce) << '\n'
    << "w_gm = " << FormatDouble(c.w_gm) << '\n'
    << "w_kl = " << FormatDouble(c.w_kl) << '\n'
    << "w_qg = " << FormatDouble(c.w_qg) << '\n'
    << "guide_clamp = " << FormatDouble(c.guide_clamp) << '\n'
    << "seed = " << c.seed << '\n'
    << "adam_beta1 = " << FormatDouble(c.adam_beta1) << '\n'
    << "adam_beta2 = " << FormatDouble(c.adam_beta2) << '\n'
    << "adam_eps = " << FormatDouble(c.adam_eps) << '\n'
    << "l2 = " << FormatDouble(c.l2) << '\n'
    << "hash_bits = " << c.hash_bits << '\n'
    << "window = " << c.context.window << '\n'
    << "radius = " << FormatDouble(c.context.radius) << '\n';
  return o.str();
}

double WarmupLearningRate(const TrainConfig &config, std::size_t step,
                          std::size_t total_steps) {
  double warm = std::ceil(config.warmup_fraction * static_cast<double>(total_steps));
  double ramp = std::max(1.0, warm);
  return config.learning_rate * std::min(1.0, static_cast<double>(step) / ramp);
}

// ---------------------------------------------------------------------------
// Adam

AdamState::AdamState(const PhiParams &phi, const ThetaParams &theta)
    : m_phi(phi.Size(), 0.0),
      v_phi(phi.Size(), 0.0),
      m_theta(theta.theta.size(), 0.0),
      v_theta(theta.theta.size(), 0.0),
      grad_phi(phi.hash_bits, phi.n_classes),
      grad_theta(theta.theta.size(), 0.0) {}

void AdamUpdate(std::span<double> params, std::span<const double> grad,
                std::span<double> m, std::span<double> v, double lr, std::size_t step,
                double beta1, double beta2, double eps) {
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grad[i];
    m[i] = beta1 * m[i] + (1.0 - beta1) * g;
    v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
    params[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
  }
}

// ---------------------------------------------------------------------------
// Objective

QualityBeliefs EstimateQualityBeliefs(const LabelMatrix &matrix_v,
                                      std::span<const ClassId> gold_v, double eps) {
  if (matrix_v.n_instances == 0) throw ValidationError("empty validation split");
  if (gold_v.size() != matrix_v.n_instances)
    throw ValidationError("validation gold labels do not align with the matrix");
  QualityBeliefs b;
  b.q.assign(matrix_v.n_lfs, 0.5);
  for (std::size_t j = 0; j < matrix_v.n_lfs; ++j) {
    std::size_t fired = 0, right = 0;
    for (std::size_t i = 0; i < matrix_v.n_instances; ++i) {
      ClassId v = matrix_v.At(i, j);
      if (v == kAbstain) continue;
      ++fired;
      right += v == gold_v[i];
    }
    if (fired > 0) b.q[j] = double(right) / double(fired);
  }
  return ClampBeliefs(std::move(b), eps);
}

LossBreakdown JointObjective(const PhiParams &phi, const ThetaParams &theta,
                             std::span<const LabeledExample> batch_l,
                             std::span<const WeakExample> batch_u,
                             const QualityBeliefs &beliefs, const TrainConfig &config,
                             PhiParams *grad_phi, ThetaGrad *grad_theta) {
  if (batch_l.empty() && batch_u.empty())
    throw ValidationError("joint step needs a labeled or an unlabeled batch");
  LossBreakdown loss;

  if (config.w_ce > 0 && !batch_l.empty())
    loss.ce = CrossEntropy(phi, batch_l, config.l2, grad_phi, config.w_ce);

  if (config.w_gm > 0) {
    std::size_t n = 0;
    for (const auto &ex : batch_u) n += ex.unlabeled;
    if (n > 0) {
      const double scale = 1.0 / static_cast<double>(n);
      for (const auto &ex : batch_u) {
        if (!ex.unlabeled) continue;
        loss.gm += scale * NllRow(theta, ex.lf_row);
        if (grad_theta) AccumulateNllGrad(theta, ex.lf_row, config.w_gm * scale, *grad_theta);
      }
    }
  }

  if (config.w_kl > 0 && !batch_u.empty()) {
    const double scale = 1.0 / static_cast<double>(batch_u.size());
    const double g = config.w_kl * scale;
    for (const auto &ex : batch_u) {
      ClassDistribution target = Posterior(theta, ex.lf_row);
      KlResult kl = KlGradAndValue(phi, *ex.features, target);
      loss.kl += scale * kl.kl;
      if (grad_phi) AccumulateLogitGrad(*ex.features, kl.d_logits, g, *grad_phi);
      if (grad_theta) {
        for (auto &d : kl.d_log_target) d *= g;
        AccumulatePosteriorGrad(theta, ex.lf_row, kl.d_log_target, *grad_theta);
      }
    }
  }

  if (config.w_qg > 0) {
    loss.qg = -QualityGuide(theta, beliefs);
    if (grad_theta) AccumulateNegGuideGrad(theta, beliefs, config.w_qg, *grad_theta);
  }

  loss.total = config.w_ce * loss.ce + config.w_gm * loss.gm + config.w_kl * loss.kl +
               config.w_qg * loss.qg;
  return loss;
}

LossBreakdown JointStep(PhiParams &phi, ThetaParams &theta,
                        std::span<const LabeledExample> batch_l,
                        std::span<const WeakExample> batch_u,
                        const QualityBeliefs &beliefs, const TrainConfig &config,
                        double learning_rate, AdamState &adam) {
  if (adam.grad_phi.weights.size() != phi.weights.size() ||
      adam.grad_theta.size() != theta.theta.size() ||
      adam.m_phi.size() != phi.Size())
    adam = AdamState(phi, theta);
  adam.grad_phi.SetZero();
  std::fill(adam.grad_theta.begin(), adam.grad_theta.end(), 0.0);

  LossBreakdown loss = JointObjective(phi, theta, batch_l, batch_u, beliefs, config,
                                      &adam.grad_phi, &adam.grad_theta);

  ++adam.step;
  const std::size_t nw = phi.weights.size();
  const std::span<double> m(adam.m_phi), v(adam.v_phi);
  AdamUpdate(phi.weights, adam.grad_phi.weights, m.first(nw), v.first(nw), learning_rate,
             adam.step, config.adam_beta1, config.adam_beta2, config.adam_eps);
  AdamUpdate(phi.bias, adam.grad_phi.bias, m.subspan(nw), v.subspan(nw), learning_rate,
             adam.step, config.adam_beta1, config.adam_beta2, config.adam_eps);
  AdamUpdate(theta.theta, adam.grad_theta, adam.m_theta, adam.v_theta, learning_rate,
             adam.step, config.adam_beta1, config.adam_beta2, config.adam_eps);
  return loss;
}

// ---------------------------------------------------------------------------
// Training loop

namespace {

// Positions [s * bs, (s + 1) * bs) of a set of size n. The largest set is
// truncated at its end; smaller sets wrap around.
template <class T>
void FillBatch(const std::vector<T> &ordered, std::size_t step, std::size_t bs,
               bool largest, std::vector<T> &out) {
  out.clear();
  const std::size_t n = ordered.size();
  if (n == 0) return;
  const std::size_t begin = step * bs;
  if (largest) {
    for (std::size_t p = begin; p < std::min(begin + bs, n); ++p) out.push_back(ordered[p]);
  } else {
    for (std::size_t i = 0; i < std::min(bs, n); ++i) out.push_back(ordered[(begin + i) % n]);
  }
}

double ValidationF1(const PhiParams &phi, const TrainingInputs &in,
                    const std::vector<std::size_t> &val, const std::vector<ClassId> &gold) {
  std::vector<ClassId> pred;
  pred.reserve(val.size());
  for (auto i : val) pred.push_back(Predict(phi, in.features[i]));
  return Score(gold, pred, in.classes).macro_f1;
}

}  // namespace

TrainedModel Train(const TrainingInputs &in, const TrainConfig &config) {
  config.Validate();
  if (!in.matrix || !in.split) throw ValidationError("training inputs incomplete");
  const LabelMatrix &matrix = *in.matrix;
  const CorpusSplit &split = *in.split;
  const int k = static_cast<int>(in.classes.size());
  if (k < 1) throw ValidationError("empty class vocabulary");
  if (in.features.size() != matrix.n_instances || in.labels.size() != matrix.n_instances)
    throw ValidationError("features, labels and label matrix are not aligned");
  const std::size_t hash_rows = std::size_t{1} << config.hash_bits;
  for (const auto &fv : in.features)
    if (!fv.sparse.empty() && fv.sparse.back() >= hash_rows)
      throw ValidationError("feature indices exceed hash_bits; re-featurize with the same hash_bits");

  std::vector<LabeledExample> labeled;
  for (auto i : split.labeled)
    if (in.labels[i]) labeled.push_back({&in.features[i], *in.labels[i]});
  std::vector<char> is_unlabeled(matrix.n_instances, 0);
  for (auto i : split.unlabeled) is_unlabeled[i] = 1;
  std::vector<std::size_t> weak_rows;
  {
    std::vector<std::size_t> pool(split.labeled);
    pool.insert(pool.end(), split.unlabeled.begin(), split.unlabeled.end());
    std::sort(pool.begin(), pool.end());
    for (auto i : pool)
      if (matrix.RowFired(i)) weak_rows.push_back(i);
  }
  std::vector<WeakExample> weak;
  for (auto i : weak_rows)
    weak.push_back({&in.features[i], {matrix.Row(i), matrix.n_lfs}, is_unlabeled[i] != 0});

  if (labeled.empty() && config.w_ce > 0)
    throw ValidationError("no labeled instances but w_ce > 0");
  if (labeled.empty() && weak.empty())
    throw ValidationError("nothing to train on: no labeled and no fired instances");

  std::vector<std::size_t> val;
  std::vector<ClassId> val_gold;
  for (auto i : split.validation)
    if (in.labels[i]) {
      val.push_back(i);
      val_gold.push_back(*in.labels[i]);
    }
  if (val.empty()) throw ValidationError("empty validation split");

  TrainedModel model;
  model.classes = in.classes;
  model.lfs = in.lfs;
  model.config = config;
  model.beliefs = EstimateQualityBeliefs(SelectRows(matrix, val), val_gold, config.guide_clamp);

  PhiParams phi(config.hash_bits, k);
  ThetaParams theta = InitialTheta(matrix.attached, k);
  AdamState adam(phi, theta);

  const std::size_t bs = config.batch_size;
  const std::size_t longest = std::max(labeled.size(), weak.size());
  const std::size_t steps_per_epoch = (longest + bs - 1) / bs;
  const std::size_t total_steps = steps_per_epoch * config.max_epochs;
  const bool labeled_largest = labeled.size() >= weak.size();

  std::mt19937_64 rng(DeriveSeed(config.seed, SeedStream::kShuffle));
  std::vector<LabeledExample> batch_l;
  std::vector<WeakExample> batch_u;
  double best_f1 = -1;
  std::size_t stale = 0;
  model.phi = phi;
  model.theta = theta;

  for (std::size_t epoch = 0; epoch < config.max_epochs; ++epoch) {
    std::shuffle(labeled.begin(), labeled.end(), rng);
    std::shuffle(weak.begin(), weak.end(), rng);
    EpochRecord rec;
    rec.epoch = epoch + 1;
    for (std::size_t s = 0; s < steps_per_epoch; ++s) {
      FillBatch(labeled, s, bs, labeled_largest, batch_l);
      FillBatch(weak, s, bs, !labeled_largest, batch_u);
      const double lr = WarmupLearningRate(config, adam.step + 1, total_steps);
      LossBreakdown l = JointStep(phi, theta, batch_l, batch_u, model.beliefs, config, lr, adam);
      rec.ce += l.ce;
      rec.gm += l.gm;
      rec.kl += l.kl;
      rec.qg += l.qg;
      rec.total += l.total;
    }
    const double inv = 1.0 / static_cast<double>(steps_per_epoch);
    rec.ce *= inv;
    rec.gm *= inv;
    rec.kl *= inv;
    rec.qg *= inv;
    rec.total *= inv;
    rec.val_f1 = ValidationF1(phi, in, val, val_gold);
    model.history.push_back(rec);

    if (rec.val_f1 > best_f1) {
      best_f1 = rec.val_f1;
      model.best_epoch = model.history.size() - 1;
      model.phi = phi;
      model.theta = theta;
      stale = 0;
    } else if (++stale >= std::max<std::size_t>(config.patience, 1)) {
      // patience 0 and 1 both stop at the first epoch without improvement
      break;
    }
  }
  return model;
}

// ---------------------------------------------------------------------------
// Inference

TokenPrediction PredictToken(const TrainedModel &model, const FeatureVector &fv) {
  TokenPrediction p;
  p.dist = Forward(model.phi, fv);
  p.label = ArgMax(p.dist);
  return p;
}

TokenPrediction PredictTokenFused(const TrainedModel &model, const FeatureVector &fv,
                                  std::span<const ClassId> lf_row) {
  TokenPrediction p = PredictToken(model, fv);
  bool fired = std::any_of(lf_row.begin(), lf_row.end(),
                           [](ClassId v) { return v != kAbstain; });
  if (!fired) return p;
  ClassDistribution gm = Posterior(model.theta, lf_row);
  for (std::size_t y = 0; y < p.dist.probs.size(); ++y)
    p.dist.probs[y] = 0.5 * (p.dist.probs[y] + gm.probs[y]);
  p.label = ArgMax(p.dist);
  return p;
}

// ---------------------------------------------------------------------------
// Bundle

std::string FormatHistory(const std::vector<EpochRecord> &history) {
  std::ostringstream o;
  o << "epoch\tce\tgm\tkl\tqg\ttotal\tval_f1\n";
  for (const auto &r : history)
    o << r.epoch << '\t' << FormatDouble(r.ce) << '\t' << FormatDouble(r.gm) << '\t'
      << FormatDouble(r.kl) << '\t' << FormatDouble(r.qg) << '\t' << FormatDouble(r.total)
      << '\t' << FormatDouble(r.val_f1) << '\n';
  return o.str();
}

namespace {

std::vector<EpochRecord> ParseHistory(const std::string &text) {
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);  // header
  std::vector<EpochRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    EpochRecord r;
    if (!(row >> r.epoch >> r.ce >> r.gm >> r.kl >> r.qg >> r.total >> r.val_f1))
      throw ValidationError("history.tsv: malformed row '" + line + "'");
    out.push_back(r);
  }
  return out;
}

}  // namespace

void WriteBundle(const TrainedModel &model, const fs::path &dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create model directory '" + dir.string() + "'");
  std::vector<std::string> ids;
  for (const auto &lf : model.lfs) ids.push_back(lf.id);
  std::ostringstream theta, phi;
  WriteTheta(model.theta, model.classes, ids, theta);
  WritePhi(model.phi, model.classes, phi);
  nlohmann::json meta = {{"version", 1},
                         {"best_epoch", model.best_epoch},
                         {"beliefs", model.beliefs.q}};
  WriteFileAtomic(dir / "theta.json", theta.str());
  WriteFileAtomic(dir / "phi.json", phi.str());
  WriteFileAtomic(dir / "lfs.json", SerializeLfSuite(model.lfs, model.classes));
  WriteFileAtomic(dir / "config.txt", FormatTrainConfig(model.config));
  WriteFileAtomic(dir / "history.tsv", FormatHistory(model.history));
  WriteFileAtomic(dir / "meta.json", meta.dump(2) + "\n");
}

TrainedModel ReadBundle(const fs::path &dir) {
  if (!fs::is_directory(dir)) throw IoError("model bundle '" + dir.string() + "' not found");
  TrainedModel model;
  std::string phi_text = ReadFile(dir / "phi.json");
  try {
    model.classes = nlohmann::json::parse(phi_text).at("classes").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception &e) {
    throw ValidationError(std::string("phi snapshot: ") + e.what());
  }
  std::istringstream phi_in(phi_text);
  model.phi = ReadPhi(phi_in, model.classes);
  model.lfs = ParseLfSuite(ReadFile(dir / "lfs.json"), model.classes);
  std::istringstream theta_in(ReadFile(dir / "theta.json"));
  model.theta = ReadTheta(theta_in, model.classes, model.lfs);
  std::istringstream cfg(ReadFile(dir / "config.txt"));
  model.config = TrainConfigFrom(ParseKeyValues(cfg));
  model.history = ParseHistory(ReadFile(dir / "history.tsv"));
  try {
    auto meta = nlohmann::json::parse(ReadFile(dir / "meta.json"));
    model.best_epoch = meta.at("best_epoch").get<std::size_t>();
    model.beliefs.q = meta.at("beliefs").get<std::vector<double>>();
  } catch (const nlohmann::json::exception &e) {
    throw ValidationError(std::string("meta.json: ") + e.what());
  }
  if (model.phi.hash_bits != model.config.hash_bits)
    throw ValidationError("bundle: phi hash_bits disagree with config");
  return model;
}

}  // namespace docws
