// docws/eval.hpp

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

#ifndef DOCWS_EVAL_HPP_
#define DOCWS_EVAL_HPP_

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "docws/document.hpp"

namespace docws {

/// Token-level scores. Zero denominators give 0, never NaN. Masked classes
/// stay in the confusion matrix and accuracy but are left out of the micro
/// and macro aggregates.
struct EvalReport {
  std::vector<std::string> classes;
  std::vector<bool> masked;
  std::vector<std::size_t> confusion;  // K x K, rows gold, columns predicted
  std::vector<double> precision, recall, f1;
  double micro_precision = 0, micro_recall = 0, micro_f1 = 0;
  double macro_precision = 0, macro_recall = 0, macro_f1 = 0;
  double accuracy = 0;
  std::size_t count = 0;

  std::size_t Confusion(ClassId gold, ClassId pred) const {
    return confusion[static_cast<std::size_t>(gold - 1) * classes.size() +
                     static_cast<std::size_t>(pred - 1)];
  }
};

EvalReport Score(std::span<const ClassId> gold, std::span<const ClassId> predicted,
                 const std::vector<std::string> &classes,
                 const std::vector<std::string> &masked_classes = {});

/// Recomputes every metric from report.confusion (used to merge reports).
EvalReport ScoreFromConfusion(const std::vector<std::string> &classes,
                              std::vector<std::size_t> confusion,
                              std::vector<bool> masked);

EvalReport Merge(const EvalReport &a, const EvalReport &b);

struct DeltaRow {
  std::string metric;
  double a = 0, b = 0, delta = 0;  // delta = b - a
  bool flagged = false;            // |delta| > 0.005
};

inline constexpr double kDeltaFlag = 0.005;

std::vector<DeltaRow> Compare(const EvalReport &a, const EvalReport &b);

void PrintReport(const EvalReport &report, std::ostream &out);
std::string ReportJson(const EvalReport &report);
/// Rebuilds a report from ReportJson output (metrics recomputed from the
/// confusion matrix).
EvalReport ReportFromJson(const std::string &text);
void PrintDeltas(const std::vector<DeltaRow> &rows, const std::string &name_a,
                 const std::string &name_b, std::ostream &out);

}  // namespace docws

#endif  // DOCWS_EVAL_HPP_
