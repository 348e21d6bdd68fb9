// core/src/eval.cpp

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

#include "docws/eval.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "docws/errors.hpp"

namespace docws {

namespace {

double Ratio(double num, double den) { return den > 0 ? num / den : 0.0; }
double Harmonic(double p, double r) { return p + r > 0 ? 2 * p * r / (p + r) : 0.0; }

}  // namespace

EvalReport ScoreFromConfusion(const std::vector<std::string> &classes,
                              std::vector<std::size_t> confusion,
                              std::vector<bool> masked) {
  const std::size_t k = classes.size();
  if (confusion.size() != k * k) throw ValidationError("confusion matrix shape mismatch");
  if (masked.empty()) masked.assign(k, false);
  EvalReport r;
  r.classes = classes;
  r.masked = std::move(masked);
  r.confusion = std::move(confusion);
  r.precision.assign(k, 0.0);
  r.recall.assign(k, 0.0);
  r.f1.assign(k, 0.0);
  std::size_t diag = 0;
  double tp_sum = 0, fp_sum = 0, fn_sum = 0;
  std::size_t active = 0;
  for (std::size_t c = 0; c < k; ++c) {
    double tp = double(r.confusion[c * k + c]), col = 0, row = 0;
    for (std::size_t o = 0; o < k; ++o) {
      col += double(r.confusion[o * k + c]);
      row += double(r.confusion[c * k + o]);
    }
    r.count += static_cast<std::size_t>(row);
    diag += r.confusion[c * k + c];
    r.precision[c] = Ratio(tp, col);
    r.recall[c] = Ratio(tp, row);
    r.f1[c] = Harmonic(r.precision[c], r.recall[c]);
    if (r.masked[c]) continue;
    ++active;
    tp_sum += tp;
    fp_sum += col - tp;
    fn_sum += row - tp;
    r.macro_precision += r.precision[c];
    r.macro_recall += r.recall[c];
    r.macro_f1 += r.f1[c];
  }
  if (active > 0) {
    r.macro_precision /= double(active);
    r.macro_recall /= double(active);
    r.macro_f1 /= double(active);
  }
  r.micro_precision = Ratio(tp_sum, tp_sum + fp_sum);
  r.micro_recall = Ratio(tp_sum, tp_sum + fn_sum);
  r.micro_f1 = Harmonic(r.micro_precision, r.micro_recall);
  r.accuracy = Ratio(double(diag), double(r.count));
  return r;
}

EvalReport Score(std::span<const ClassId> gold, std::span<const ClassId> predicted,
                 const std::vector<std::string> &classes,
                 const std::vector<std::string> &masked_classes) {
  if (gold.size() != predicted.size())
    throw ValidationError("gold (" + std::to_string(gold.size()) + ") and predicted (" +
                          std::to_string(predicted.size()) + ") lengths differ");
  const std::size_t k = classes.size();
  const auto kk = static_cast<ClassId>(k);
  std::vector<bool> masked(k, false);
  for (const auto &name : masked_classes) {
    auto it = std::find(classes.begin(), classes.end(), name);
    if (it == classes.end()) throw ValidationError("cannot mask unknown class '" + name + "'");
    masked[static_cast<std::size_t>(it - classes.begin())] = true;
  }
  std::vector<std::size_t> confusion(k * k, 0);
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (gold[i] < 1 || gold[i] > kk || predicted[i] < 1 || predicted[i] > kk)
      throw ValidationError("label out of range at position " + std::to_string(i));
    ++confusion[static_cast<std::size_t>(gold[i] - 1) * k +
                static_cast<std::size_t>(predicted[i] - 1)];
  }
  return ScoreFromConfusion(classes, std::move(confusion), std::move(masked));
}

EvalReport Merge(const EvalReport &a, const EvalReport &b) {
  if (a.classes != b.classes) throw ValidationError("cannot merge reports over different classes");
  std::vector<std::size_t> c(a.confusion);
  for (std::size_t i = 0; i < c.size(); ++i) c[i] += b.confusion[i];
  return ScoreFromConfusion(a.classes, std::move(c), a.masked);
}

std::vector<DeltaRow> Compare(const EvalReport &a, const EvalReport &b) {
  if (a.classes != b.classes)
    throw ValidationError("cannot compare reports over different class vocabularies");
  std::vector<DeltaRow> rows;
  auto add = [&](std::string name, double va, double vb) {
    double d = vb - va;
    rows.push_back({std::move(name), va, vb, d, std::abs(d) > kDeltaFlag});
  };
  add("macro_f1", a.macro_f1, b.macro_f1);
  add("macro_precision", a.macro_precision, b.macro_precision);
  add("macro_recall", a.macro_recall, b.macro_recall);
  add("micro_f1", a.micro_f1, b.micro_f1);
  add("accuracy", a.accuracy, b.accuracy);
  for (std::size_t c = 0; c < a.classes.size(); ++c)
    add("f1[" + a.classes[c] + "]", a.f1[c], b.f1[c]);
  return rows;
}

void PrintReport(const EvalReport &r, std::ostream &out) {
  std::size_t w = 7;
  for (const auto &c : r.classes) w = std::max(w, c.size());
  auto iw = static_cast<int>(w);
  out << std::fixed << std::setprecision(3);
  out << std::left << std::setw(iw) << "class" << std::right << std::setw(11) << "precision"
      << std::setw(9) << "recall" << std::setw(9) << "f1" << std::setw(9) << "support" << '\n';
  const std::size_t k = r.classes.size();
  for (std::size_t c = 0; c < k; ++c) {
    std::size_t support = 0;
    for (std::size_t o = 0; o < k; ++o) support += r.confusion[c * k + o];
    out << std::left << std::setw(iw) << (r.classes[c] + (r.masked[c] ? "*" : ""))
        << std::right << std::setw(11) << r.precision[c] << std::setw(9) << r.recall[c]
        << std::setw(9) << r.f1[c] << std::setw(9) << support << '\n';
  }
  out << std::left << std::setw(iw) << "macro" << std::right << std::setw(11)
      << r.macro_precision << std::setw(9) << r.macro_recall << std::setw(9) << r.macro_f1
      << std::setw(9) << r.count << '\n';
  out << std::left << std::setw(iw) << "micro" << std::right << std::setw(11)
      << r.micro_precision << std::setw(9) << r.micro_recall << std::setw(9) << r.micro_f1
      << std::setw(9) << r.count << '\n';
  out << "accuracy " << r.accuracy << '\n';
  out << "confusion (rows gold, columns predicted)\n";
  for (std::size_t g = 0; g < k; ++g) {
    out << std::left << std::setw(iw) << r.classes[g] << std::right;
    for (std::size_t p = 0; p < k; ++p) out << std::setw(9) << r.confusion[g * k + p];
    out << '\n';
  }
  out << std::defaultfloat;
}

std::string ReportJson(const EvalReport &r) {
  nlohmann::json per = nlohmann::json::array();
  for (std::size_t c = 0; c < r.classes.size(); ++c)
    per.push_back({{"class", r.classes[c]},
                   {"precision", r.precision[c]},
                   {"recall", r.recall[c]},
                   {"f1", r.f1[c]},
                   {"masked", static_cast<bool>(r.masked[c])}});
  nlohmann::json j = {{"classes", r.classes},
                      {"confusion", r.confusion},
                      {"per_class", per},
                      {"micro", {{"precision", r.micro_precision},
                                 {"recall", r.micro_recall},
                                 {"f1", r.micro_f1}}},
                      {"macro", {{"precision", r.macro_precision},
                                 {"recall", r.macro_recall},
                                 {"f1", r.macro_f1}}},
                      {"accuracy", r.accuracy},
                      {"count", r.count}};
  return j.dump(2);
}

EvalReport ReportFromJson(const std::string &text) {
  try {
    auto j = nlohmann::json::parse(text);
    auto classes = j.at("classes").get<std::vector<std::string>>();
    auto confusion = j.at("confusion").get<std::vector<std::size_t>>();
    if (confusion.size() != classes.size() * classes.size())
      throw ValidationError("report: confusion matrix does not match the classes");
    std::vector<bool> masked(classes.size(), false);
    if (j.contains("per_class")) {
      const auto &per = j["per_class"];
      for (std::size_t c = 0; c < classes.size() && c < per.size(); ++c)
        masked[c] = per[c].value("masked", false);
    }
    return ScoreFromConfusion(classes, std::move(confusion), std::move(masked));
  } catch (const nlohmann::json::exception &e) {
    throw ValidationError(std::string("report: ") + e.what());
  }
}

void PrintDeltas(const std::vector<DeltaRow> &rows, const std::string &name_a,
                 const std::string &name_b, std::ostream &out) {
  std::size_t w = 6;
  for (const auto &r : rows) w = std::max(w, r.metric.size());
  auto iw = static_cast<int>(w);
  auto cw = static_cast<int>(std::max<std::size_t>({9, name_a.size() + 2, name_b.size() + 2}));
  out << std::fixed << std::setprecision(3);
  out << std::left << std::setw(iw) << "metric" << std::right << std::setw(cw) << name_a
      << std::setw(cw) << name_b << std::setw(9) << "delta" << '\n';
  for (const auto &r : rows) {
    std::ostringstream d;
    d << std::fixed << std::setprecision(3) << std::showpos << r.delta;
    out << std::left << std::setw(iw) << r.metric << std::right << std::setw(cw) << r.a
        << std::setw(cw) << r.b << std::setw(9) << d.str() << (r.flagged ? " *" : "") << '\n';
  }
  out << std::defaultfloat;
}

}  // namespace docws
