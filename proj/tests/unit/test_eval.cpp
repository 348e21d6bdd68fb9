// tests/unit/test_eval.cpp

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

#include <algorithm>
#include <cmath>
#include <sstream>

#include <doctest.h>

#include "test_util.hpp"

using namespace docws;
using namespace docws::testing;

namespace {

const std::vector<std::string> kAB = {"A", "B"};

std::vector<ClassId> RandomLabels(Rng &rng, std::size_t n, int k) {
  std::vector<ClassId> v(n);
  for (auto &x : v) x = UniformInt(rng, 1, k);
  return v;
}

}  // namespace

TEST_CASE("hand-counted example") {
  std::vector<ClassId> gold = {1, 1, 2, 2}, pred = {1, 2, 2, 2};
  EvalReport r = Score(gold, pred, kAB);
  CHECK(r.precision[0] == doctest::Approx(1.0));
  CHECK(r.recall[0] == doctest::Approx(0.5));
  CHECK(r.f1[0] == doctest::Approx(2.0 / 3.0));
  CHECK(r.precision[1] == doctest::Approx(2.0 / 3.0));
  CHECK(r.recall[1] == doctest::Approx(1.0));
  CHECK(r.f1[1] == doctest::Approx(0.8));
  CHECK(r.macro_f1 == doctest::Approx((2.0 / 3.0 + 0.8) / 2));
  CHECK(r.accuracy == doctest::Approx(0.75));
  CHECK(r.micro_f1 == doctest::Approx(r.accuracy));
  CHECK(r.Confusion(1, 2) == 1);
}

TEST_CASE("perfect prediction and zero denominators") {
  std::vector<ClassId> g = {1, 2, 1};
  EvalReport r = Score(g, g, {"A", "B", "C"});
  CHECK(r.f1[0] == 1.0);
  CHECK(r.accuracy == 1.0);
  CHECK(r.f1[2] == 0.0);  // never gold, never predicted
  CHECK(r.precision[2] == 0.0);
  CHECK_FALSE(std::isnan(r.macro_f1));

  EvalReport empty = Score({}, {}, kAB);
  CHECK(empty.count == 0);
  CHECK(empty.macro_f1 == 0);
  CHECK(empty.accuracy == 0);
}

TEST_CASE("micro-F1 equals accuracy without masking") {
  Rng rng(1);
  for (int t = 0; t < 20; ++t) {
    auto g = RandomLabels(rng, 50, 4), p = RandomLabels(rng, 50, 4);
    EvalReport r = Score(g, p, {"A", "B", "C", "D"});
    CHECK(r.micro_f1 == doctest::Approx(r.accuracy).epsilon(1e-12));
  }
}

TEST_CASE("score errors") {
  std::vector<ClassId> a = {1, 2}, b = {1};
  CHECK_THROWS_AS(Score(a, b, kAB), ValidationError);
  std::vector<ClassId> c = {1, 3};
  CHECK_THROWS_AS(Score(a, c, kAB), ValidationError);
  CHECK_THROWS_AS(Score(a, a, kAB, {"Z"}), ValidationError);
}

TEST_CASE("masking drops a class from the aggregates only") {
  std::vector<ClassId> gold = {1, 1, 2, 2}, pred = {1, 2, 2, 2};
  EvalReport r = Score(gold, pred, kAB, {"A"});
  CHECK(r.masked == std::vector<bool>{true, false});
  CHECK(r.macro_f1 == doctest::Approx(0.8));
  CHECK(r.accuracy == doctest::Approx(0.75));
  CHECK(r.f1[0] == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("compare examples") {
  EvalReport a = Score(std::vector<ClassId>{1, 2}, std::vector<ClassId>{1, 2}, kAB);
  for (const auto &row : Compare(a, a)) {
    CHECK(row.delta == 0);
    CHECK_FALSE(row.flagged);
  }
  EvalReport base = a, eigen = a;
  base.macro_f1 = 0.684;
  eigen.macro_f1 = 0.772;
  auto rows = Compare(base, eigen);
  CHECK(rows[0].metric == "macro_f1");
  CHECK(rows[0].delta == doctest::Approx(0.088));
  CHECK(rows[0].flagged);
  CHECK_THROWS_AS(Compare(a, Score({}, {}, {"A", "B", "C"})), ValidationError);
}

TEST_CASE("compare is antisymmetric, score is permutation invariant") {
  Rng rng(2);
  const std::vector<std::string> k3 = {"A", "B", "C"};
  for (int t = 0; t < 20; ++t) {
    auto g = RandomLabels(rng, 30, 3);
    auto p1 = RandomLabels(rng, 30, 3), p2 = RandomLabels(rng, 30, 3);
    EvalReport a = Score(g, p1, k3), b = Score(g, p2, k3);
    auto ab = Compare(a, b), ba = Compare(b, a);
    for (std::size_t i = 0; i < ab.size(); ++i) CHECK(ab[i].delta == -ba[i].delta);

    std::vector<std::size_t> perm(30);
    for (std::size_t i = 0; i < 30; ++i) perm[i] = i;
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<ClassId> gp, pp;
    for (auto i : perm) {
      gp.push_back(g[i]);
      pp.push_back(p1[i]);
    }
    EvalReport s = Score(gp, pp, k3);
    CHECK(s.confusion == a.confusion);
    CHECK(s.macro_f1 == a.macro_f1);

    // scoring two halves and merging equals scoring the whole
    std::span<const ClassId> gs(g), ps(p1);
    EvalReport merged = Merge(Score(gs.first(13), ps.first(13), k3), Score(gs.subspan(13), ps.subspan(13), k3));
    CHECK(merged.confusion == a.confusion);
    CHECK(merged.macro_f1 == doctest::Approx(a.macro_f1).epsilon(1e-15));
  }
}

TEST_CASE("report json round trip and printing") {
  std::vector<ClassId> gold = {1, 1, 2, 2, 3}, pred = {1, 2, 2, 2, 1};
  EvalReport r = Score(gold, pred, {"A", "B", "C"}, {"C"});
  EvalReport back = ReportFromJson(ReportJson(r));
  CHECK(back.classes == r.classes);
  CHECK(back.confusion == r.confusion);
  CHECK(back.masked == r.masked);
  CHECK(back.macro_f1 == r.macro_f1);
  CHECK_THROWS_AS(ReportFromJson("{}"), ValidationError);

  std::ostringstream out;
  PrintReport(r, out);
  CHECK(out.str().find("C*") != std::string::npos);
  std::ostringstream d;
  PrintDeltas(Compare(r, back), "a", "b", d);
  CHECK(d.str().find("macro_f1") != std::string::npos);
}
