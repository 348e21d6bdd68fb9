// core/src/features.cpp

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

#include "docws/features.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <istream>
#include <ostream>

#include <nlohmann/json.hpp>

#include "docws/errors.hpp"
#include "docws/seed.hpp"

namespace docws {

using nlohmann::json;

std::uint64_t HashFeature(FeatureFamily family, std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL ^ Mix64(static_cast<std::uint64_t>(family));
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return Mix64(h);
}

std::string WordShape(std::string_view text) {
  std::string out;
  for (unsigned char c : text) {
    char s;
    if (c < 128 && std::isupper(c))
      s = 'X';
    else if (c < 128 && std::islower(c))
      s = 'x';
    else if (c < 128 && std::isdigit(c))
      s = '9';
    else
      s = '#';
    if (out.empty() || out.back() != s) out.push_back(s);
  }
  return out;
}

namespace {

std::string Lower(std::string_view text) {
  std::string out(text);
  for (auto &c : out)
    if (static_cast<unsigned char>(c) < 128)
      c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

const ContextEntry *Nearest(const TokenContext &ctx, Direction dir) {
  for (const auto &e : ctx.neighbors)
    if (e.direction == dir) return &e;
  return nullptr;
}

}  // namespace

FeatureVector Featurize(const TokenContext &ctx, int hash_bits) {
  const Token &tok = ctx.Anchor();
  const NormBBox &box = ctx.Box();
  const std::string &text = tok.text;
  FeatureVector fv;

  double n = static_cast<double>(text.size());
  std::size_t digits = 0, upper = 0, punct = 0;
  for (unsigned char c : text) {
    if (c >= 128) continue;
    digits += std::isdigit(c) != 0;
    upper += std::isupper(c) != 0;
    punct += std::ispunct(c) != 0;
  }
  fv.dense = {box.CenterX(),
              box.CenterY(),
              box.x1 - box.x0,
              box.y1 - box.y0,
              std::log1p(n),
              n > 0 ? digits / n : 0.0,
              n > 0 ? upper / n : 0.0,
              n > 0 ? punct / n : 0.0};

  const std::uint64_t mask = (std::uint64_t{1} << hash_bits) - 1;
  auto add = [&](FeatureFamily f, std::string_view s) {
    fv.sparse.push_back(static_cast<std::uint32_t>(HashFeature(f, s) & mask));
  };
  const std::string lower = Lower(text);
  add(FeatureFamily::kWord, lower);
  add(FeatureFamily::kShape, WordShape(text));
  const std::string padded = "^" + lower + "$";
  for (std::size_t i = 0; i + 3 <= padded.size(); ++i)
    add(FeatureFamily::kTrigram, std::string_view(padded).substr(i, 3));
  const auto &tokens = ctx.layout->doc->tokens;
  const ContextEntry *left = Nearest(ctx, Direction::kLeft);
  const ContextEntry *right = Nearest(ctx, Direction::kRight);
  add(FeatureFamily::kLeftWord, left ? Lower(tokens[left->token].text) : "<none>");
  add(FeatureFamily::kRightWord, right ? Lower(tokens[right->token].text) : "<none>");

  std::sort(fv.sparse.begin(), fv.sparse.end());
  fv.sparse.erase(std::unique(fv.sparse.begin(), fv.sparse.end()), fv.sparse.end());
  return fv;
}

std::vector<FeatureVector> FeaturizeCorpus(const Corpus &corpus,
                                           const ContextParams &params,
                                           int hash_bits) {
  std::vector<FeatureVector> out;
  out.reserve(corpus.NumTokens());
  for (const auto &doc : corpus.documents) {
    auto layout = MakeLayout(doc);
    for (std::size_t t : layout->order)
      out.push_back(Featurize(ContextOf(layout, t, params), hash_bits));
  }
  return out;
}

PhiParams::PhiParams(int bits, int num_classes) : hash_bits(bits), n_classes(num_classes) {
  if (bits < 1 || bits > 28) throw ValidationError("hash_bits must lie in [1, 28]");
  if (num_classes < 1) throw ValidationError("need at least one class");
  weights.assign(Rows() * static_cast<std::size_t>(num_classes), 0.0);
  bias.assign(static_cast<std::size_t>(num_classes), 0.0);
}

void PhiParams::SetZero() {
  std::fill(weights.begin(), weights.end(), 0.0);
  std::fill(bias.begin(), bias.end(), 0.0);
}

std::vector<double> Logits(const PhiParams &phi, const FeatureVector &fv) {
  const std::size_t k = static_cast<std::size_t>(phi.n_classes);
  std::vector<double> z(phi.bias);
  for (std::size_t d = 0; d < kDenseDim; ++d) {
    const double *w = &phi.weights[d * k];
    for (std::size_t y = 0; y < k; ++y) z[y] += fv.dense[d] * w[y];
  }
  const std::size_t rows = phi.Rows();
  for (auto s : fv.sparse) {
    std::size_t r = kDenseDim + s;
    if (r >= rows) throw ValidationError("sparse feature index exceeds the hash space");
    const double *w = &phi.weights[r * k];
    for (std::size_t y = 0; y < k; ++y) z[y] += w[y];
  }
  return z;
}

namespace {

std::vector<double> LogSoftmax(const std::vector<double> &z) {
  double lse = LogSumExp(z);
  std::vector<double> out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = z[i] - lse;
  return out;
}

}  // namespace

ClassDistribution Forward(const PhiParams &phi, const FeatureVector &fv) {
  auto lp = LogSoftmax(Logits(phi, fv));
  for (auto &v : lp) v = std::exp(v);
  return {std::move(lp)};
}

ClassId ArgMax(const ClassDistribution &dist) {
  std::size_t best = 0;
  for (std::size_t y = 1; y < dist.probs.size(); ++y)
    if (dist.probs[y] > dist.probs[best]) best = y;
  return static_cast<ClassId>(best + 1);
}

ClassId Predict(const PhiParams &phi, const FeatureVector &fv) {
  // argmax over logits equals argmax over probabilities
  auto z = Logits(phi, fv);
  return ArgMax({std::move(z)});
}

void AccumulateLogitGrad(const FeatureVector &fv, std::span<const double> d_logits,
                         double scale, PhiParams &grad) {
  const std::size_t k = static_cast<std::size_t>(grad.n_classes);
  for (std::size_t y = 0; y < k; ++y) grad.bias[y] += scale * d_logits[y];
  for (std::size_t d = 0; d < kDenseDim; ++d) {
    double *g = &grad.weights[d * k];
    for (std::size_t y = 0; y < k; ++y) g[y] += scale * fv.dense[d] * d_logits[y];
  }
  for (auto s : fv.sparse) {
    double *g = &grad.weights[(kDenseDim + s) * k];
    for (std::size_t y = 0; y < k; ++y) g[y] += scale * d_logits[y];
  }
}

double CrossEntropy(const PhiParams &phi, std::span<const LabeledExample> batch,
                    double l2, PhiParams *grad, double grad_scale) {
  if (batch.empty()) throw ValidationError("cross-entropy over an empty batch");
  const double scale = 1.0 / static_cast<double>(batch.size());
  double loss = 0;
  std::vector<double> d(static_cast<std::size_t>(phi.n_classes));
  for (const auto &ex : batch) {
    if (ex.gold < 1 || ex.gold > phi.n_classes)
      throw ValidationError("gold label out of range");
    auto lp = LogSoftmax(Logits(phi, *ex.features));
    const std::size_t g = static_cast<std::size_t>(ex.gold - 1);
    loss -= lp[g];
    if (grad) {
      for (std::size_t y = 0; y < d.size(); ++y) d[y] = std::exp(lp[y]) - (y == g ? 1.0 : 0.0);
      AccumulateLogitGrad(*ex.features, d, grad_scale * scale, *grad);
    }
  }
  loss *= scale;
  if (l2 > 0) {
    const double g = grad_scale * l2;
    double sq = 0;
    for (double w : phi.weights) sq += w * w;
    loss += 0.5 * l2 * sq;
    if (grad)
      for (std::size_t i = 0; i < phi.weights.size(); ++i)
        grad->weights[i] += g * phi.weights[i];
  }
  return loss;
}

CeResult CeLossAndGrad(const PhiParams &phi, std::span<const LabeledExample> batch,
                       double l2) {
  CeResult r;
  r.grad = PhiParams(phi.hash_bits, phi.n_classes);
  r.loss = CrossEntropy(phi, batch, l2, &r.grad);
  return r;
}

KlResult KlGradAndValue(const PhiParams &phi, const FeatureVector &fv,
                        const ClassDistribution &target) {
  const std::size_t k = static_cast<std::size_t>(phi.n_classes);
  if (target.probs.size() != k) throw ValidationError("target distribution shape mismatch");
  auto lp = LogSoftmax(Logits(phi, fv));
  std::vector<double> lt(k);
  KlResult r;
  r.d_log_target.assign(k, 0.0);
  for (std::size_t y = 0; y < k; ++y) {
    lt[y] = std::log(std::max(target.probs[y], kTargetFloor));
    double p = std::exp(lp[y]);
    r.kl += p * (lp[y] - lt[y]);
    if (target.probs[y] >= kTargetFloor) r.d_log_target[y] = -p;
  }
  r.d_logits.resize(k);
  for (std::size_t y = 0; y < k; ++y)
    r.d_logits[y] = std::exp(lp[y]) * (lp[y] - lt[y] - r.kl);
  return r;
}

void WritePhi(const PhiParams &phi, const std::vector<std::string> &classes,
              std::ostream &out) {
  const std::size_t k = static_cast<std::size_t>(phi.n_classes);
  json rows = json::array();
  for (std::size_t r = 0; r < phi.Rows(); ++r) {
    const double *w = &phi.weights[r * k];
    if (std::all_of(w, w + k, [](double v) { return v == 0.0; })) continue;
    rows.push_back({r, std::vector<double>(w, w + k)});
  }
  json j = {{"version", 1},          {"hash_bits", phi.hash_bits},
            {"dense_dim", kDenseDim}, {"classes", classes},
            {"weights", rows},        {"bias", phi.bias}};
  out << j.dump() << '\n';
}

PhiParams ReadPhi(std::istream &in, const std::vector<std::string> &classes) {
  json j;
  try {
    j = json::parse(in);
    if (j.at("classes").get<std::vector<std::string>>() != classes)
      throw ValidationError("phi snapshot: class vocabulary mismatch");
    if (j.at("dense_dim").get<std::size_t>() != kDenseDim)
      throw ValidationError("phi snapshot: dense_dim mismatch");
    PhiParams phi(j.at("hash_bits").get<int>(), static_cast<int>(classes.size()));
    const std::size_t k = classes.size();
    for (const auto &row : j.at("weights")) {
      std::size_t r = row.at(0).get<std::size_t>();
      const auto &vals = row.at(1);
      if (r >= phi.Rows() || vals.size() != k)
        throw ValidationError("phi snapshot: bad weight row");
      for (std::size_t y = 0; y < k; ++y) phi.weights[r * k + y] = vals[y].get<double>();
    }
    auto bias = j.at("bias").get<std::vector<double>>();
    if (bias.size() != k) throw ValidationError("phi snapshot: bias shape mismatch");
    phi.bias = std::move(bias);
    return phi;
  } catch (const json::exception &e) {
    throw ValidationError(std::string("phi snapshot: ") + e.what());
  }
}

}  // namespace docws
