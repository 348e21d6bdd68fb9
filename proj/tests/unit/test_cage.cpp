// tests/unit/test_cage.cpp

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

#include <cmath>
#include <sstream>

#include <doctest.h>

#include "test_util.hpp"

using namespace docws;
using namespace docws::testing;

namespace {

ThetaParams OneLf() {
  ThetaParams t = InitialTheta({1}, 2);  // theta = [[1, 0]]
  return t;
}

LabelMatrix MatrixOf(const ThetaParams &t, const std::vector<std::vector<ClassId>> &rows) {
  LabelMatrix m;
  m.n_lfs = t.n_lfs;
  m.n_instances = rows.size();
  m.attached = t.attached;
  for (std::size_t j = 0; j < t.n_lfs; ++j) m.lf_ids.push_back("l" + std::to_string(j));
  for (int y = 1; y <= t.n_classes; ++y) m.classes.push_back("c" + std::to_string(y));
  m.doc_ids = {"d"};
  for (std::size_t i = 0; i < rows.size(); ++i) {
    m.instance_index.push_back({0, i});
    m.entries.insert(m.entries.end(), rows[i].begin(), rows[i].end());
  }
  return m;
}

}  // namespace

TEST_CASE("initial theta puts 1 on the attached class") {
  ThetaParams t = InitialTheta({2, 1}, 3);
  CHECK(t.theta == std::vector<double>{0, 1, 0, 1, 0, 0});
}

TEST_CASE("worked examples for the m=1 K=2 model") {
  ThetaParams t = OneLf();
  const double e = std::exp(1.0);
  CHECK(LogPartition(t) == doctest::Approx(std::log(3 + e)).epsilon(1e-14));
  CHECK(std::abs(LogPartition(t) - 1.743660) < 1e-5);  // published figure is rounded
  std::vector<ClassId> fired = {1};
  CHECK(JointProb(t, fired, 1) == doctest::Approx(0.475367).epsilon(1e-5));
  CHECK(JointProb(t, fired, 2) == doctest::Approx(0.174878).epsilon(1e-5));
  ClassDistribution p = Posterior(t, fired);
  CHECK(p[1] == doctest::Approx(0.731059).epsilon(1e-6));
  CHECK(p[2] == doctest::Approx(0.268941).epsilon(1e-6));
  CHECK(NllRow(t, fired) == doctest::Approx(-std::log((1 + e) / (3 + e))).epsilon(1e-14));
  CHECK(std::abs(NllRow(t, fired) - 0.430405) < 1e-5);
  CHECK(LfPrecisionModel(t, 0) == doctest::Approx(0.731059).epsilon(1e-6));

  QualityBeliefs half{{0.5}};
  ThetaParams zero = t;
  zero.theta = {0, 0};
  CHECK(QualityGuide(zero, half) == doctest::Approx(std::log(0.5)).epsilon(1e-12));
}

TEST_CASE("trivial partition values") {
  for (std::size_t m : {0u, 1u, 3u, 6u})
    for (int k : {1, 2, 5}) {
      std::vector<ClassId> attached(m, 1);
      ThetaParams t(attached, k);
      CHECK(LogPartition(t) == doctest::Approx(std::log(k * std::pow(2.0, m))).epsilon(1e-12));
    }
}

TEST_CASE("all-abstain rows give equal joints and a uniform posterior") {
  Rng rng(3);
  ThetaParams t = RandomTheta(rng, 4, 3);
  std::vector<ClassId> row(4, kAbstain);
  ClassDistribution p = Posterior(t, row);
  for (ClassId y = 1; y <= 3; ++y) {
    CHECK(p[y] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(JointProb(t, row, y) == doctest::Approx(std::exp(-LogPartition(t))).epsilon(1e-12));
  }
}

TEST_CASE("partition, joint, posterior and precision match enumeration") {
  Rng rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    std::size_t m = static_cast<std::size_t>(UniformInt(rng, 1, 6));
    int k = UniformInt(rng, 2, 4);
    ThetaParams t = RandomTheta(rng, m, k);
    CHECK(RelErr(LogPartition(t), std::log(EnumeratePartition(t))) < 1e-9);
    auto row = RandomRow(rng, t);
    auto oracle = EnumeratePosterior(t, row);
    ClassDistribution p = Posterior(t, row);
    double sum = 0;
    for (ClassId y = 1; y <= k; ++y) {
      CHECK(std::abs(p[y] - oracle[y - 1]) < 1e-9);
      CHECK(RelErr(JointProb(t, row, y), EnumerateJoint(t, row, y)) < 1e-9);
      sum += p[y];
    }
    CHECK(std::abs(sum - 1) < 1e-9);
    for (std::size_t j = 0; j < m; ++j) {
      double pj = LfPrecisionModel(t, j);
      CHECK(std::abs(pj - EnumeratePrecision(t, j)) < 1e-9);
      CHECK(pj > 0);
      CHECK(pj < 1);
    }
    CHECK(NllRow(t, row) >= 0);
    CHECK(QualityGuide(t, QualityBeliefs{std::vector<double>(m, Uniform(rng, 0.01, 0.99))}) <= 0);
  }
}

TEST_CASE("posterior of the attached class grows with theta") {
  Rng rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    ThetaParams t = RandomTheta(rng, 3, 3);
    std::vector<ClassId> row = {t.attached[0], kAbstain, kAbstain};
    double before = Posterior(t, row)[t.attached[0]];
    t(0, t.attached[0]) += 0.5;
    CHECK(Posterior(t, row)[t.attached[0]] > before);
  }
}

TEST_CASE("large theta stays finite") {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    ThetaParams t = RandomTheta(rng, 5, 3, -500, 500);
    auto row = RandomRow(rng, t);
    CHECK(std::isfinite(LogPartition(t)));
    CHECK(std::isfinite(NllRow(t, row)));
    ClassDistribution p = Posterior(t, row);
    double s = 0;
    for (double v : p.probs) {
      CHECK(std::isfinite(v));
      s += v;
    }
    CHECK(std::abs(s - 1) < 1e-9);
    for (std::size_t j = 0; j < 5; ++j) CHECK(std::isfinite(LfPrecisionModel(t, j)));
    CHECK(std::isfinite(QualityGuide(t, QualityBeliefs{{0.9, 0.8, 0.7, 0.6, 0.5}})));
  }
}

TEST_CASE("guide is maximized where the model precision equals the belief") {
  // m=1, K=2: precision = sigmoid(theta_11 - theta_12).
  ThetaParams t = OneLf();
  for (double q : {0.2, 0.5, 0.9}) {
    double best = std::log(q / (1 - q));
    t.theta = {best, 0};
    double at = QualityGuide(t, QualityBeliefs{{q}});
    CHECK(LfPrecisionModel(t, 0) == doctest::Approx(q).epsilon(1e-12));
    for (double d : {-0.3, -0.01, 0.01, 0.3}) {
      t.theta = {best + d, 0};
      CHECK(QualityGuide(t, QualityBeliefs{{q}}) < at);
    }
  }
}

TEST_CASE("beliefs are clamped") {
  QualityBeliefs b = ClampBeliefs({{0.0, 1.0, 0.5}});
  CHECK(b.q[0] == doctest::Approx(1e-3));
  CHECK(b.q[1] == doctest::Approx(1 - 1e-3));
  CHECK(b.q[2] == 0.5);
}

TEST_CASE("nll is additive over rows and zero for an empty matrix") {
  Rng rng(13);
  ThetaParams t = RandomTheta(rng, 3, 2);
  std::vector<ClassId> row = {t.attached[0], kAbstain, t.attached[2]};
  double one = NllUnsupervised(t, MatrixOf(t, {row}));
  CHECK(NllUnsupervised(t, MatrixOf(t, {row, row})) == doctest::Approx(2 * one).epsilon(1e-14));
  CHECK(NllUnsupervised(t, MatrixOf(t, {})) == 0);

  LabelMatrix mixed = MatrixOf(t, {row, {kAbstain, kAbstain, kAbstain}, row});
  CHECK(FiredRows(mixed) == std::vector<std::size_t>{0, 2});
}

TEST_CASE("analytic gradients match central differences") {
  Rng rng(19);
  for (int trial = 0; trial < 20; ++trial) {
    std::size_t m = static_cast<std::size_t>(UniformInt(rng, 1, 5));
    int k = UniformInt(rng, 2, 4);
    ThetaParams t = RandomTheta(rng, m, k, -2, 2);
    std::vector<std::vector<ClassId>> rows;
    for (int i = 0; i < 6; ++i) rows.push_back(RandomRow(rng, t, 0.6));
    LabelMatrix mat = SelectRows(MatrixOf(t, rows), FiredRows(MatrixOf(t, rows)));
    QualityBeliefs beliefs;
    for (std::size_t j = 0; j < m; ++j) beliefs.q.push_back(Uniform(rng, 0.3, 0.95));
    CageWeights w{Uniform(rng, 0.5, 1.5), Uniform(rng, 0.5, 1.5)};

    ThetaGrad g = GradTheta(t, mat, beliefs, w);
    auto f = [&] { return w.nll * NllUnsupervised(t, mat) - w.guide * QualityGuide(t, beliefs); };
    for (std::size_t i = 0; i < t.theta.size(); ++i) {
      double fd = CentralDiff(t.theta, i, 1e-5, f);
      CHECK_MESSAGE(GradClose(g[i], fd, 1e-4), "entry ", i, ": ", g[i], " vs ", fd);
    }

    // d log P(y | row) back-propagated with a random upstream gradient
    auto row = RandomRow(rng, t, 0.7);
    std::vector<double> up(static_cast<std::size_t>(k));
    for (auto &u : up) u = Uniform(rng, -1, 1);
    ThetaGrad pg(t.theta.size(), 0.0);
    AccumulatePosteriorGrad(t, row, up, pg);
    auto h = [&] {
      ClassDistribution p = Posterior(t, row);
      double s = 0;
      for (int y = 0; y < k; ++y) s += up[y] * std::log(p.probs[y]);
      return s;
    };
    for (std::size_t i = 0; i < t.theta.size(); ++i)
      CHECK(GradClose(pg[i], CentralDiff(t.theta, i, 1e-5, h), 1e-4));
  }
}

TEST_CASE("theta file round trip") {
  Rng rng(29);
  ThetaParams t = RandomTheta(rng, 2, 3);
  t.attached = {1, 3};
  std::vector<LabelingFunction> lfs = {{"a", 1, MakeKeyword({"x"})}, {"b", 3, MakeKeyword({"y"})}};
  std::vector<std::string> classes = {"A", "B", "C"};
  std::stringstream io;
  WriteTheta(t, classes, {"a", "b"}, io);
  ThetaParams r = ReadTheta(io, classes, lfs);
  CHECK(r.theta == t.theta);
  CHECK(r.attached == t.attached);

  std::stringstream io2;
  WriteTheta(t, classes, {"a", "b"}, io2);
  CHECK_THROWS_AS(ReadTheta(io2, {"A", "B"}, lfs), ValidationError);
}
