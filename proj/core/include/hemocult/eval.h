// Copyright 2026 The Hemocult Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef HEMOCULT_EVAL_H_
#define HEMOCULT_EVAL_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

namespace hemocult {

struct PrPoint {
  double recall = 0.0;
  double precision = 0.0;
  double threshold = 0.0;

  bool operator==(const PrPoint&) const = default;
};

// One point per distinct score, thresholds descending, so recall is
// non-decreasing along `points`.
struct PrCurve {
  std::vector<PrPoint> points;
  double auc = 0.0;
};

// Sweeps every distinct score s (descending), predicting positive for
// score >= s. The area is the average-precision step sum
// sum_i (R_i - R_{i-1}) * P_i with R_0 = 0. Throws UndefinedRecallError when
// no label is positive and ShapeError on length mismatch.
PrCurve BuildPrCurve(std::span<const double> scores,
                     std::span<const int> labels);

double PrAuc(std::span<const double> scores, std::span<const int> labels);

// Step-integrates already-built points.
double StepArea(std::span<const PrPoint> points);

// "Always the same class": every example scored 1.0.
double BaselineConstant(std::span<const int> labels);

// Scores drawn as 1 with probability equal to the prevalence, else 0.
double BaselineProportional(std::span<const int> labels, std::uint64_t seed);

// CSV `threshold,recall,precision` plus a trailing `# auc=<value>` line.
void ExportCurveCsv(const PrCurve& curve, const std::filesystem::path& path);
PrCurve ImportCurveCsv(const std::filesystem::path& path);

// Step plot of precision against recall.
void ExportCurveSvg(const PrCurve& curve, const std::filesystem::path& path);

struct EvalReport {
  double test_pr_auc = 0.0;
  double baseline1_pr_auc = 0.0;
  double baseline2_pr_auc = 0.0;
  std::uint64_t baseline2_seed = 0;
  double prevalence = 0.0;
  std::size_t n = 0;
  std::size_t n_pos = 0;
  // Mean best-epoch validation PR AUC over the cross-validation folds.
  std::optional<double> cv_val_pr_auc;
};

void WriteEvalReport(const EvalReport& report,
                     const std::filesystem::path& path);
EvalReport ReadEvalReport(const std::filesystem::path& path);

}  // namespace hemocult

#endif  // HEMOCULT_EVAL_H_
