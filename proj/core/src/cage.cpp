// core/src/cage.cpp

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

#include "docws/cage.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>

#include <nlohmann/json.hpp>

#include "docws/errors.hpp"

namespace docws {

using nlohmann::json;

ThetaParams::ThetaParams(std::vector<ClassId> attached_classes, int num_classes)
    : n_lfs(attached_classes.size()),
      n_classes(num_classes),
      theta(attached_classes.size() * static_cast<std::size_t>(num_classes), 0.0),
      attached(std::move(attached_classes)) {}

ThetaParams InitialTheta(const std::vector<ClassId> &attached, int num_classes) {
  ThetaParams t(attached, num_classes);
  for (std::size_t j = 0; j < t.n_lfs; ++j) t(j, attached[j]) = 1.0;
  return t;
}

QualityBeliefs ClampBeliefs(QualityBeliefs beliefs, double eps) {
  for (auto &q : beliefs.q) q = std::clamp(q, eps, 1.0 - eps);
  return beliefs;
}

double LogSumExp(std::span<const double> v) {
  if (v.empty()) return -std::numeric_limits<double>::infinity();
  double mx = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(mx)) return mx;
  double s = 0;
  for (double x : v) s += std::exp(x - mx);
  return mx + std::log(s);
}

double Softplus(double x) {
  return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double Sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

namespace {

std::size_t K(const ThetaParams &t) { return static_cast<std::size_t>(t.n_classes); }

// S_y = sum_j softplus(theta(j, y)); log Z = logsumexp_y S_y.
std::vector<double> ColumnSoftplusSums(const ThetaParams &t) {
  std::vector<double> s(K(t), 0.0);
  for (std::size_t j = 0; j < t.n_lfs; ++j)
    for (std::size_t y = 0; y < K(t); ++y) s[y] += Softplus(t.theta[j * K(t) + y]);
  return s;
}

// s_y = sum over fired j of theta(j, y).
std::vector<double> FiredScores(const ThetaParams &t, std::span<const ClassId> row) {
  if (row.size() != t.n_lfs)
    throw ValidationError("label row has " + std::to_string(row.size()) +
                          " entries, model has " + std::to_string(t.n_lfs) + " LFs");
  std::vector<double> s(K(t), 0.0);
  for (std::size_t j = 0; j < t.n_lfs; ++j) {
    if (row[j] == kAbstain) continue;
    for (std::size_t y = 0; y < K(t); ++y) s[y] += t.theta[j * K(t) + y];
  }
  return s;
}

std::vector<double> Softmax(std::span<const double> v) {
  double lse = LogSumExp(v);
  std::vector<double> p(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) p[i] = std::exp(v[i] - lse);
  return p;
}

// a_y = theta(j, y) + sum_{j' != j} softplus(theta(j', y)); the precision of
// LF j is softmax(a)[k_j].
std::vector<double> PrecisionLogits(const ThetaParams &t, std::size_t j,
                                    const std::vector<double> &col_sums) {
  std::vector<double> a(K(t));
  for (std::size_t y = 0; y < K(t); ++y) {
    double th = t.theta[j * K(t) + y];
    a[y] = th + (col_sums[y] - Softplus(th));
  }
  return a;
}

struct GuideTerm {
  double value = 0;
  bool clamped = false;
  std::vector<double> logits;  // a
};

GuideTerm EvalGuideTerm(const ThetaParams &t, std::size_t j, double q,
                        const std::vector<double> &col_sums) {
  GuideTerm g;
  g.logits = PrecisionLogits(t, j, col_sums);
  const std::size_t k = static_cast<std::size_t>(t.attached[j] - 1);
  double lse = LogSumExp(g.logits);
  double log_p = g.logits[k] - lse;
  std::vector<double> others;
  for (std::size_t y = 0; y < K(t); ++y)
    if (y != k) others.push_back(g.logits[y]);
  double log_1mp = LogSumExp(others) - lse;
  double p = std::exp(log_p);
  if (p < kPrecisionClamp || p > 1.0 - kPrecisionClamp || !std::isfinite(log_1mp)) {
    p = std::clamp(p, kPrecisionClamp, 1.0 - kPrecisionClamp);
    g.clamped = true;
    log_p = std::log(p);
    log_1mp = std::log1p(-p);
  }
  g.value = q * log_p + (1.0 - q) * log_1mp;
  return g;
}

}  // namespace

double Potential(const ThetaParams &theta, std::size_t j, ClassId l_ij, ClassId y) {
  return l_ij != kAbstain ? std::exp(theta(j, y)) : 1.0;
}

double LogPartition(const ThetaParams &theta) {
  return LogSumExp(ColumnSoftplusSums(theta));
}

double JointProb(const ThetaParams &theta, std::span<const ClassId> row, ClassId y) {
  auto s = FiredScores(theta, row);
  return std::exp(s[static_cast<std::size_t>(y - 1)] - LogPartition(theta));
}

ClassDistribution Posterior(const ThetaParams &theta, std::span<const ClassId> row) {
  auto s = FiredScores(theta, row);
  return {Softmax(s)};
}

double NllRow(const ThetaParams &theta, std::span<const ClassId> row) {
  return LogPartition(theta) - LogSumExp(FiredScores(theta, row));
}

double NllUnsupervised(const ThetaParams &theta, const LabelMatrix &matrix) {
  if (matrix.n_instances == 0) return 0.0;
  const double log_z = LogPartition(theta);
  double total = 0;
  for (std::size_t i = 0; i < matrix.n_instances; ++i) {
    std::span<const ClassId> row(matrix.Row(i), matrix.n_lfs);
    total += log_z - LogSumExp(FiredScores(theta, row));
  }
  return total;
}

std::vector<std::size_t> FiredRows(const LabelMatrix &matrix) {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < matrix.n_instances; ++i)
    if (matrix.RowFired(i)) rows.push_back(i);
  return rows;
}

double LfPrecisionModel(const ThetaParams &theta, std::size_t j) {
  auto a = PrecisionLogits(theta, j, ColumnSoftplusSums(theta));
  return Softmax(a)[static_cast<std::size_t>(theta.attached[j] - 1)];
}

double QualityGuide(const ThetaParams &theta, const QualityBeliefs &beliefs) {
  if (beliefs.q.size() != theta.n_lfs)
    throw ValidationError("quality beliefs do not match the number of LFs");
  auto col = ColumnSoftplusSums(theta);
  double r = 0;
  for (std::size_t j = 0; j < theta.n_lfs; ++j)
    r += EvalGuideTerm(theta, j, beliefs.q[j], col).value;
  return r;
}

void AccumulateNllGrad(const ThetaParams &theta, std::span<const ClassId> row,
                       double scale, ThetaGrad &grad) {
  const std::size_t k = K(theta);
  // d log Z / d theta(j, y) = pi_y * sigmoid(theta(j, y))
  auto pi = Softmax(ColumnSoftplusSums(theta));
  auto post = Softmax(FiredScores(theta, row));
  for (std::size_t j = 0; j < theta.n_lfs; ++j) {
    const bool fired = row[j] != kAbstain;
    for (std::size_t y = 0; y < k; ++y) {
      double g = pi[y] * Sigmoid(theta.theta[j * k + y]);
      if (fired) g -= post[y];
      grad[j * k + y] += scale * g;
    }
  }
}

void AccumulateNegGuideGrad(const ThetaParams &theta, const QualityBeliefs &beliefs,
                            double scale, ThetaGrad &grad) {
  if (beliefs.q.size() != theta.n_lfs)
    throw ValidationError("quality beliefs do not match the number of LFs");
  const std::size_t kk = K(theta);
  auto col = ColumnSoftplusSums(theta);
  std::vector<double> sig(theta.theta.size());
  for (std::size_t i = 0; i < sig.size(); ++i) sig[i] = Sigmoid(theta.theta[i]);

  for (std::size_t j = 0; j < theta.n_lfs; ++j) {
    GuideTerm term = EvalGuideTerm(theta, j, beliefs.q[j], col);
    if (term.clamped) continue;
    const double q = beliefs.q[j];
    const std::size_t k = static_cast<std::size_t>(theta.attached[j] - 1);
    auto r = Softmax(term.logits);
    std::vector<double> others;
    for (std::size_t y = 0; y < kk; ++y)
      if (y != k) others.push_back(term.logits[y]);
    const double lse_others = LogSumExp(others);
    // dR/da_y
    std::vector<double> d_a(kk);
    for (std::size_t y = 0; y < kk; ++y) {
      double own = (y == k ? 1.0 : 0.0) - r[y];
      double other = (y == k ? 0.0 : std::exp(term.logits[y] - lse_others)) - r[y];
      d_a[y] = q * own + (1.0 - q) * other;
    }
    for (std::size_t jj = 0; jj < theta.n_lfs; ++jj)
      for (std::size_t y = 0; y < kk; ++y) {
        // a_y = theta(j, y) + sum over j' != j of softplus(theta(j', y))
        double da_dtheta = jj == j ? 1.0 : sig[jj * kk + y];
        grad[jj * kk + y] -= scale * d_a[y] * da_dtheta;
      }
  }
}

void AccumulatePosteriorGrad(const ThetaParams &theta, std::span<const ClassId> row,
                             std::span<const double> d_log_posterior,
                             ThetaGrad &grad) {
  const std::size_t k = K(theta);
  auto t = Softmax(FiredScores(theta, row));
  double gsum = 0;
  for (double g : d_log_posterior) gsum += g;
  std::vector<double> ds(k);
  for (std::size_t y = 0; y < k; ++y) ds[y] = d_log_posterior[y] - t[y] * gsum;
  for (std::size_t j = 0; j < theta.n_lfs; ++j) {
    if (row[j] == kAbstain) continue;
    for (std::size_t y = 0; y < k; ++y) grad[j * k + y] += ds[y];
  }
}

ThetaGrad GradTheta(const ThetaParams &theta, const LabelMatrix &matrix,
                    const QualityBeliefs &beliefs, const CageWeights &weights) {
  ThetaGrad grad(theta.theta.size(), 0.0);
  if (weights.nll != 0)
    for (std::size_t i = 0; i < matrix.n_instances; ++i)
      AccumulateNllGrad(theta, {matrix.Row(i), matrix.n_lfs}, weights.nll, grad);
  if (weights.guide != 0) AccumulateNegGuideGrad(theta, beliefs, weights.guide, grad);
  return grad;
}

void WriteTheta(const ThetaParams &theta, const std::vector<std::string> &classes,
                const std::vector<std::string> &lf_ids, std::ostream &out) {
  json lfs = json::array();
  json grid = json::array();
  for (std::size_t j = 0; j < theta.n_lfs; ++j) {
    lfs.push_back({{"id", lf_ids.at(j)},
                   {"class", classes.at(static_cast<std::size_t>(theta.attached[j] - 1))}});
    json row = json::array();
    for (ClassId y = 1; y <= theta.n_classes; ++y) row.push_back(theta(j, y));
    grid.push_back(std::move(row));
  }
  json j = {{"version", 1}, {"classes", classes}, {"lfs", lfs}, {"theta", grid}};
  out << j.dump(2) << '\n';
}

ThetaParams ReadTheta(std::istream &in, const std::vector<std::string> &classes,
                      const std::vector<LabelingFunction> &lfs) {
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception &e) {
    throw ValidationError(std::string("theta snapshot: ") + e.what());
  }
  try {
    if (j.at("classes").get<std::vector<std::string>>() != classes)
      throw ValidationError("theta snapshot: class vocabulary mismatch");
    const auto &jl = j.at("lfs");
    const auto &grid = j.at("theta");
    if (jl.size() != lfs.size() || grid.size() != lfs.size())
      throw ValidationError("theta snapshot: expected " + std::to_string(lfs.size()) +
                            " LF rows");
    std::vector<ClassId> attached;
    for (const auto &lf : lfs) attached.push_back(lf.attached_class);
    ThetaParams t(attached, static_cast<int>(classes.size()));
    for (std::size_t r = 0; r < lfs.size(); ++r) {
      if (jl[r].at("id").get<std::string>() != lfs[r].id ||
          jl[r].at("class").get<std::string>() !=
              classes[static_cast<std::size_t>(lfs[r].attached_class - 1)])
        throw ValidationError("theta snapshot: LF row " + std::to_string(r) +
                              " does not match the suite");
      if (grid[r].size() != classes.size())
        throw ValidationError("theta snapshot: row " + std::to_string(r) +
                              " has the wrong number of classes");
      for (std::size_t y = 0; y < classes.size(); ++y) {
        double v = grid[r][y].get<double>();
        if (!std::isfinite(v)) throw ValidationError("theta snapshot: non-finite entry");
        t.theta[r * classes.size() + y] = v;
      }
    }
    return t;
  } catch (const json::exception &e) {
    throw ValidationError(std::string("theta snapshot: ") + e.what());
  }
}

}  // namespace docws
