// tests/unit/test_util.hpp

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

// Shared test fixtures: brute-force oracles for the label model, finite
// differences, and tiny corpora. The oracles deliberately avoid the
// closed forms used by the library.

#ifndef DOCWS_TESTS_TEST_UTIL_HPP_
#define DOCWS_TESTS_TEST_UTIL_HPP_

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "docws/docws.hpp"

namespace docws::testing {

using Rng = std::mt19937_64;

inline double Uniform(Rng &rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}
inline int UniformInt(Rng &rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

inline double RelErr(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

/// Random theta with entries in [lo, hi] and random attached classes.
inline ThetaParams RandomTheta(Rng &rng, std::size_t m, int k, double lo = -3, double hi = 3) {
  std::vector<ClassId> attached(m);
  for (auto &a : attached) a = UniformInt(rng, 1, k);
  ThetaParams t = InitialTheta(attached, k);
  for (auto &v : t.theta) v = Uniform(rng, lo, hi);
  return t;
}

/// Row where LF j fires (emits k_j) with probability p_fire.
inline std::vector<ClassId> RandomRow(Rng &rng, const ThetaParams &t, double p_fire = 0.5) {
  std::vector<ClassId> row(t.n_lfs, kAbstain);
  for (std::size_t j = 0; j < t.n_lfs; ++j)
    if (Uniform(rng, 0, 1) < p_fire) row[j] = t.attached[j];
  return row;
}

// Unnormalized weight of (firing pattern, y) straight from the potentials.
inline double PatternWeight(const ThetaParams &t, std::uint64_t pattern, ClassId y) {
  double w = 1;
  for (std::size_t j = 0; j < t.n_lfs; ++j)
    if (pattern >> j & 1) w *= std::exp(t(j, y));
  return w;
}

/// Z by enumerating all K * 2^m (class, firing pattern) terms.
inline double EnumeratePartition(const ThetaParams &t) {
  double z = 0;
  for (ClassId y = 1; y <= t.n_classes; ++y)
    for (std::uint64_t p = 0; p < (std::uint64_t{1} << t.n_lfs); ++p) z += PatternWeight(t, p, y);
  return z;
}

inline std::uint64_t PatternOf(const std::vector<ClassId> &row) {
  std::uint64_t p = 0;
  for (std::size_t j = 0; j < row.size(); ++j)
    if (row[j] != kAbstain) p |= std::uint64_t{1} << j;
  return p;
}

inline double EnumerateJoint(const ThetaParams &t, const std::vector<ClassId> &row, ClassId y) {
  return PatternWeight(t, PatternOf(row), y) / EnumeratePartition(t);
}

inline std::vector<double> EnumeratePosterior(const ThetaParams &t, const std::vector<ClassId> &row) {
  std::vector<double> p(t.n_classes);
  double s = 0;
  for (ClassId y = 1; y <= t.n_classes; ++y) s += p[y - 1] = EnumerateJoint(t, row, y);
  for (auto &v : p) v /= s;
  return p;
}

/// P(y = k_j | LF j fired) by summing the joint over every pattern with
/// bit j set.
inline double EnumeratePrecision(const ThetaParams &t, std::size_t j) {
  double num = 0, den = 0;
  for (ClassId y = 1; y <= t.n_classes; ++y)
    for (std::uint64_t p = 0; p < (std::uint64_t{1} << t.n_lfs); ++p) {
      if (!(p >> j & 1)) continue;
      double w = PatternWeight(t, p, y);
      den += w;
      if (y == t.attached[j]) num += w;
    }
  return num / den;
}

/// Central difference of f with respect to x[i].
inline double CentralDiff(std::vector<double> &x, std::size_t i, double h,
                          const std::function<double()> &f) {
  const double keep = x[i];
  x[i] = keep + h;
  const double up = f();
  x[i] = keep - h;
  const double down = f();
  x[i] = keep;
  return (up - down) / (2 * h);
}

/// |a - b| / max(|a|, |b|), with an absolute floor for near-zero entries.
inline bool GradClose(double analytic, double numeric, double rel, double abs_floor = 1e-7) {
  const double d = std::abs(analytic - numeric);
  return d <= rel * std::max(std::abs(analytic), std::abs(numeric)) || d <= abs_floor;
}

inline Token MakeToken(std::string text, double x0, double y0, double x1, double y1,
                       std::optional<ClassId> gold = std::nullopt) {
  Token t;
  t.text = std::move(text);
  t.bbox = {x0, y0, x1, y1};
  t.gold_label = gold;
  return t;
}

/// A single-line document: tokens left to right, 100 px apart.
inline Document LineDoc(const std::string &id, const std::vector<std::string> &words,
                        const std::vector<ClassId> &gold = {}) {
  Document d;
  d.doc_id = id;
  d.page_width = 1000;
  d.page_height = 1000;
  for (std::size_t i = 0; i < words.size(); ++i) {
    double x = 10 + 100 * static_cast<double>(i);
    d.tokens.push_back(MakeToken(words[i], x, 100, x + 80, 120,
                                 i < gold.size() ? std::optional<ClassId>(gold[i]) : std::nullopt));
  }
  return d;
}

inline std::filesystem::path TempDir(const std::string &name) {
  auto p = std::filesystem::temp_directory_path() / ("docws_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

/// Random sparse feature vector over a small hash space.
inline FeatureVector RandomFeatures(Rng &rng, int hash_bits, std::size_t n_sparse = 4) {
  FeatureVector fv;
  for (auto &d : fv.dense) d = Uniform(rng, -1, 1);
  const auto rows = std::uint32_t{1} << hash_bits;
  for (std::size_t i = 0; i < n_sparse; ++i)
    fv.sparse.push_back(static_cast<std::uint32_t>(UniformInt(rng, 0, static_cast<int>(rows) - 1)));
  std::sort(fv.sparse.begin(), fv.sparse.end());
  fv.sparse.erase(std::unique(fv.sparse.begin(), fv.sparse.end()), fv.sparse.end());
  return fv;
}

inline void Randomize(PhiParams &phi, Rng &rng, double scale = 0.5) {
  for (auto &w : phi.weights) w = Uniform(rng, -scale, scale);
  for (auto &b : phi.bias) b = Uniform(rng, -scale, scale);
}

}  // namespace docws::testing

#endif  // DOCWS_TESTS_TEST_UTIL_HPP_
