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

#include "hemocult/eval.h"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <string>

#include "hemocult/errors.h"
#include "hemocult/io.h"

namespace hemocult {

PrCurve BuildPrCurve(std::span<const double> scores,
                     std::span<const int> labels) {
  if (scores.size() != labels.size()) {
    throw ShapeError("scores and labels differ in length");
  }
  const auto n_pos = static_cast<std::size_t>(
      std::count(labels.begin(), labels.end(), 1));
  if (n_pos == 0) throw UndefinedRecallError("no positive labels");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return scores[a] > scores[b];
                   });

  PrCurve curve;
  std::size_t tp = 0;
  std::size_t predicted = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double threshold = scores[order[i]];
    // Tied scores cannot be separated by a threshold.
    while (i < order.size() && scores[order[i]] == threshold) {
      tp += labels[order[i]] == 1 ? 1 : 0;
      ++predicted;
      ++i;
    }
    curve.points.push_back(
        {static_cast<double>(tp) / static_cast<double>(n_pos),
         static_cast<double>(tp) / static_cast<double>(predicted), threshold});
  }
  curve.auc = StepArea(curve.points);
  return curve;
}

double StepArea(std::span<const PrPoint> points) {
  double area = 0.0;
  double previous_recall = 0.0;
  for (const PrPoint& p : points) {
    area += (p.recall - previous_recall) * p.precision;
    previous_recall = p.recall;
  }
  return area;
}

double PrAuc(std::span<const double> scores, std::span<const int> labels) {
  return BuildPrCurve(scores, labels).auc;
}

double BaselineConstant(std::span<const int> labels) {
  const std::vector<double> scores(labels.size(), 1.0);
  return PrAuc(scores, labels);
}

double BaselineProportional(std::span<const int> labels, std::uint64_t seed) {
  const auto n_pos = std::count(labels.begin(), labels.end(), 1);
  if (n_pos == 0) throw UndefinedRecallError("no positive labels");
  const double prevalence =
      static_cast<double>(n_pos) / static_cast<double>(labels.size());
  std::mt19937_64 engine(seed);
  std::bernoulli_distribution draw(prevalence);
  std::vector<double> scores(labels.size());
  for (double& s : scores) s = draw(engine) ? 1.0 : 0.0;
  return PrAuc(scores, labels);
}

void ExportCurveCsv(const PrCurve& curve, const std::filesystem::path& path) {
  std::ofstream out = io::OpenForWrite(path);
  out << "threshold,recall,precision\n";
  for (const PrPoint& p : curve.points) {
    out << io::FormatDouble(p.threshold) << ',' << io::FormatDouble(p.recall)
        << ',' << io::FormatDouble(p.precision) << '\n';
  }
  out << "# auc=" << io::FormatDouble(curve.auc) << '\n';
  out.flush();
  if (!out) throw IoError("write failed: " + path.string());
}

PrCurve ImportCurveCsv(const std::filesystem::path& path) {
  std::ifstream in = io::OpenForRead(path);
  std::string line;
  if (!std::getline(in, line) || line != "threshold,recall,precision") {
    throw IoError("missing curve CSV header in " + path.string());
  }
  PrCurve curve;
  bool have_auc = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.rfind("# auc=", 0) == 0) {
      curve.auc = io::ParseDouble(std::string_view(line).substr(6));
      have_auc = true;
      continue;
    }
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos) {
      throw IoError("malformed curve row: " + line);
    }
    const std::string_view view(line);
    curve.points.push_back({io::ParseDouble(view.substr(c1 + 1, c2 - c1 - 1)),
                            io::ParseDouble(view.substr(c2 + 1)),
                            io::ParseDouble(view.substr(0, c1))});
  }
  if (!have_auc) throw IoError("curve CSV lacks auc footer");
  return curve;
}

void ExportCurveSvg(const PrCurve& curve, const std::filesystem::path& path) {
  constexpr double kSize = 400.0;
  constexpr double kMargin = 40.0;
  const auto x = [&](double recall) { return kMargin + recall * kSize; };
  const auto y = [&](double precision) {
    return kMargin + (1.0 - precision) * kSize;
  };
  std::ofstream out = io::OpenForWrite(path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"480\" "
         "height=\"480\" viewBox=\"0 0 480 480\">\n"
      << "<rect x=\"40\" y=\"40\" width=\"400\" height=\"400\" fill=\"none\" "
         "stroke=\"#888\"/>\n"
      << "<text x=\"240\" y=\"470\" text-anchor=\"middle\">recall</text>\n"
      << "<text x=\"12\" y=\"240\" transform=\"rotate(-90 12 240)\" "
         "text-anchor=\"middle\">precision</text>\n"
      << "<text x=\"240\" y=\"28\" text-anchor=\"middle\">PR AUC = "
      << io::FormatDouble(curve.auc) << "</text>\n"
      << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\" "
         "points=\"";
  double recall = 0.0;
  double precision = curve.points.empty() ? 1.0 : curve.points.front().precision;
  out << x(recall) << ',' << y(precision);
  for (const PrPoint& p : curve.points) {
    // Horizontal run at the new precision, as the step sum integrates it.
    out << ' ' << x(recall) << ',' << y(p.precision) << ' ' << x(p.recall)
        << ',' << y(p.precision);
    recall = p.recall;
  }
  out << "\"/>\n</svg>\n";
  if (!out) throw IoError("write failed: " + path.string());
}

void WriteEvalReport(const EvalReport& report,
                     const std::filesystem::path& path) {
  std::map<std::string, std::string> values = {
      {"test_pr_auc", io::FormatDouble(report.test_pr_auc)},
      {"baseline1_pr_auc", io::FormatDouble(report.baseline1_pr_auc)},
      {"baseline2_pr_auc", io::FormatDouble(report.baseline2_pr_auc)},
      {"baseline2_seed", std::to_string(report.baseline2_seed)},
      {"prevalence", io::FormatDouble(report.prevalence)},
      {"n", std::to_string(report.n)},
      {"n_pos", std::to_string(report.n_pos)},
  };
  if (report.cv_val_pr_auc) {
    values["cv_val_pr_auc"] = io::FormatDouble(*report.cv_val_pr_auc);
  }
  io::WriteKeyValues(path, values);
}

EvalReport ReadEvalReport(const std::filesystem::path& path) {
  const auto values = io::ReadKeyValues(path);
  const auto get = [&](const std::string& key) -> const std::string& {
    const auto it = values.find(key);
    if (it == values.end()) throw IoError("report lacks " + key);
    return it->second;
  };
  EvalReport report;
  report.test_pr_auc = io::ParseDouble(get("test_pr_auc"));
  report.baseline1_pr_auc = io::ParseDouble(get("baseline1_pr_auc"));
  report.baseline2_pr_auc = io::ParseDouble(get("baseline2_pr_auc"));
  report.baseline2_seed =
      static_cast<std::uint64_t>(io::ParseInt(get("baseline2_seed")));
  report.prevalence = io::ParseDouble(get("prevalence"));
  report.n = static_cast<std::size_t>(io::ParseInt(get("n")));
  report.n_pos = static_cast<std::size_t>(io::ParseInt(get("n_pos")));
  if (values.count("cv_val_pr_auc")) {
    report.cv_val_pr_auc = io::ParseDouble(values.at("cv_val_pr_auc"));
  }
  return report;
}

}  // namespace hemocult
