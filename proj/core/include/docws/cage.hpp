// docws/cage.hpp

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

// Generative label model over LF firings.
//
// Each LF j owns one parameter per class, theta(j, y). A fired LF contributes
// the potential exp(theta(j, y)); an abstaining LF contributes 1. The joint
//
//   P(l, y) = prod_j psi(l_j, y) / Z,   Z = sum_y prod_j (1 + exp(theta(j, y)))
//
// normalizes over classes and over every fire/abstain pattern, so that
// summing P over all patterns and classes gives one. Everything below is
// computed in log space.

#ifndef DOCWS_CAGE_HPP_
#define DOCWS_CAGE_HPP_

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "docws/document.hpp"
#include "docws/lf.hpp"

namespace docws {

struct ThetaParams {
  std::size_t n_lfs = 0;
  int n_classes = 0;
  std::vector<double> theta;      // n_lfs x n_classes, row-major; column y-1
  std::vector<ClassId> attached;  // k_j per LF

  ThetaParams() = default;
  ThetaParams(std::vector<ClassId> attached_classes, int num_classes);

  double &operator()(std::size_t j, ClassId y) {
    return theta[j * static_cast<std::size_t>(n_classes) + static_cast<std::size_t>(y - 1)];
  }
  double operator()(std::size_t j, ClassId y) const {
    return theta[j * static_cast<std::size_t>(n_classes) + static_cast<std::size_t>(y - 1)];
  }
};

/// theta(j, k_j) = 1, every other entry 0.
ThetaParams InitialTheta(const std::vector<ClassId> &attached, int num_classes);

/// probs[y - 1] for y in 1..K.
struct ClassDistribution {
  std::vector<double> probs;
  double operator[](ClassId y) const { return probs[static_cast<std::size_t>(y - 1)]; }
};

inline constexpr double kBeliefClamp = 1e-3;

struct QualityBeliefs {
  std::vector<double> q;
};

/// Clamps every belief to [eps, 1 - eps].
QualityBeliefs ClampBeliefs(QualityBeliefs beliefs, double eps = kBeliefClamp);

double LogSumExp(std::span<const double> v);
double Softplus(double x);  // log(1 + exp(x))
double Sigmoid(double x);

double Potential(const ThetaParams &theta, std::size_t j, ClassId l_ij, ClassId y);
double LogPartition(const ThetaParams &theta);
double JointProb(const ThetaParams &theta, std::span<const ClassId> row, ClassId y);
ClassDistribution Posterior(const ThetaParams &theta, std::span<const ClassId> row);

/// Summed over rows; returns 0 for an empty matrix. Rows that fire nothing
/// should be filtered out by the caller (see FiredRows).
double NllUnsupervised(const ThetaParams &theta, const LabelMatrix &matrix);
double NllRow(const ThetaParams &theta, std::span<const ClassId> row);

/// Indices of rows with at least one firing.
std::vector<std::size_t> FiredRows(const LabelMatrix &matrix);

/// P(y = k_j | LF j fired), other LFs marginalized out.
double LfPrecisionModel(const ThetaParams &theta, std::size_t j);

inline constexpr double kPrecisionClamp = 1e-6;

/// sum_j q_j log p_j + (1 - q_j) log(1 - p_j), p_j clamped to
/// [1e-6, 1 - 1e-6]. Always <= 0.
double QualityGuide(const ThetaParams &theta, const QualityBeliefs &beliefs);

struct CageWeights {
  double nll = 1.0;
  double guide = 1.0;
};

/// Same shape as theta.theta.
using ThetaGrad = std::vector<double>;

/// Adds d/dtheta of NllRow(row) * scale into grad.
void AccumulateNllGrad(const ThetaParams &theta, std::span<const ClassId> row,
                       double scale, ThetaGrad &grad);

/// Adds d/dtheta of (-QualityGuide) * scale into grad.
void AccumulateNegGuideGrad(const ThetaParams &theta, const QualityBeliefs &beliefs,
                            double scale, ThetaGrad &grad);

/// Back-propagates a gradient on log P(y | row) (one value per class) into
/// theta.
void AccumulatePosteriorGrad(const ThetaParams &theta, std::span<const ClassId> row,
                             std::span<const double> d_log_posterior,
                             ThetaGrad &grad);

/// Gradient of [w.nll * NLL(matrix) - w.guide * QualityGuide].
ThetaGrad GradTheta(const ThetaParams &theta, const LabelMatrix &matrix,
                    const QualityBeliefs &beliefs, const CageWeights &weights);

/// Snapshot file: {version, classes, lfs: [{id, class}], theta: m x K}.
void WriteTheta(const ThetaParams &theta, const std::vector<std::string> &classes,
                const std::vector<std::string> &lf_ids, std::ostream &out);
/// Validates shape and attached classes against the LF suite.
ThetaParams ReadTheta(std::istream &in, const std::vector<std::string> &classes,
                      const std::vector<LabelingFunction> &lfs);

}  // namespace docws

#endif  // DOCWS_CAGE_HPP_
