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

// File-to-file stages behind the `hemocult` command-line tool.
//
//   generate    cohort config          -> cohort.tsv
//   preprocess  cohort.tsv             -> prep/{split.tsv,stats.txt,tensors.bin}
//   train       prep/                  -> run/{config.txt,cv_table.csv,
//                                              member_NN.ckpt,manifest.txt}
//   evaluate    prep/ + run/           -> eval/{report.txt,pr_curve.csv,
//                                               pr_curve.svg}
//   pipeline    all of the above under one work directory and master seed

#ifndef HEMOCULT_PIPELINE_H_
#define HEMOCULT_PIPELINE_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <ostream>
#include <string>

#include "hemocult/cohort.h"
#include "hemocult/eval.h"
#include "hemocult/train.h"

namespace hemocult {

inline constexpr std::uint64_t kDefaultSeed = 0;

struct GenerateOptions {
  CohortConfig cohort;
  std::filesystem::path out;
};

struct GenerateSummary {
  std::size_t admissions = 0;
  std::size_t positives = 0;
  std::size_t measurements = 0;
};

GenerateSummary RunGenerate(const GenerateOptions& options,
                            std::ostream* log = nullptr);

struct PreprocessOptions {
  std::filesystem::path cohort;
  std::filesystem::path out_dir;
  double test_fraction = 0.10;
  std::uint64_t seed = kDefaultSeed;
};

struct PreprocessSummary {
  std::size_t tensors = 0;
  std::size_t train = 0;
  std::size_t test = 0;
  std::size_t test_positives = 0;
  std::size_t outliers_removed = 0;
};

// Splits first, fits normalization on the training partition only, then
// emits tensors for every admission.
PreprocessSummary RunPreprocess(const PreprocessOptions& options,
                                std::ostream* log = nullptr);

struct TrainOptions {
  std::filesystem::path prep_dir;
  std::filesystem::path run_dir;
  HyperParams hyper;
  bool grid = false;
  int folds = 10;
  int jobs = 1;
};

struct TrainSummary {
  HyperParams selected;
  double cv_mean_val_pr_auc = 0.0;
  std::size_t members = 0;
  std::size_t cv_rows = 0;
};

TrainSummary RunTrain(const TrainOptions& options, std::ostream* log = nullptr);

struct EvaluateOptions {
  std::filesystem::path prep_dir;
  std::filesystem::path run_dir;
  std::filesystem::path out_dir;
  std::uint64_t seed = kDefaultSeed;  // baseline 2
};

EvalReport RunEvaluate(const EvaluateOptions& options,
                       std::ostream* log = nullptr);

struct PipelineOptions {
  std::filesystem::path work_dir;
  std::uint64_t seed = kDefaultSeed;
  CohortConfig cohort;
  double test_fraction = 0.10;
  HyperParams hyper;
  bool grid = false;
  int folds = 10;
  int jobs = 1;

  // 300 admissions, 40 positive, hidden 10, lr 0.01, at most 20 epochs.
  static PipelineOptions Quick();
};

struct PipelineResult {
  EvalReport report;
  std::string summary_line;  // test_pr_auc=<v> baseline1=<v> baseline2=<v>
};

PipelineResult RunPipeline(const PipelineOptions& options,
                           std::ostream* log = nullptr);

// Ensemble and normalization statistics from a run and prep directory.
Ensemble LoadEnsemble(const std::filesystem::path& prep_dir,
                      const std::filesystem::path& run_dir);

}  // namespace hemocult

#endif  // HEMOCULT_PIPELINE_H_
