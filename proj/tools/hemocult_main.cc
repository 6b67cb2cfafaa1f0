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

// hemocult: generate / preprocess / train / evaluate / pipeline.
//
// Exit codes:
//   0 success
//   1 unexpected internal error
//   2 invalid configuration or command line
//   3 I/O failure or malformed input file
//   4 preprocessing data failure (empty class in the split, variable
//     without training values, negative admission without measurements)
//   5 training diverged
//   6 checkpoint / tensor shape mismatch

#include <iostream>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "hemocult/errors.h"
#include "hemocult/io.h"
#include "hemocult/pipeline.h"

namespace {

using hemocult::io::FormatDouble;

struct CohortFlags {
  std::size_t n = 0;
  std::size_t positives = 0;
  double outlier_rate = 0.0;
  double signal_strength = 0.0;
  double min_horizon = 0.0;
  double max_horizon = 0.0;
  CLI::Option* n_opt = nullptr;
  CLI::Option* positives_opt = nullptr;
  CLI::Option* outlier_opt = nullptr;
  CLI::Option* signal_opt = nullptr;
  CLI::Option* min_horizon_opt = nullptr;
  CLI::Option* max_horizon_opt = nullptr;

  void Register(CLI::App* app) {
    n_opt = app->add_option("--n", n, "Number of admissions");
    positives_opt =
        app->add_option("--positives", positives, "Positive admissions");
    outlier_opt = app->add_option("--outlier-rate", outlier_rate,
                                  "Fraction of limited values made outliers");
    signal_opt = app->add_option("--signal-strength", signal_strength,
                                 "Scale of the pre-culture drift");
    min_horizon_opt =
        app->add_option("--min-horizon", min_horizon, "Shortest stay, hours");
    max_horizon_opt =
        app->add_option("--max-horizon", max_horizon, "Longest stay, hours");
  }

  void Apply(hemocult::CohortConfig& config) const {
    if (*n_opt) config.n_admissions = n;
    if (*positives_opt) config.n_positive = positives;
    if (*outlier_opt) config.outlier_rate = outlier_rate;
    if (*signal_opt) config.signal_strength = signal_strength;
    if (*min_horizon_opt) config.min_horizon_hours = min_horizon;
    if (*max_horizon_opt) config.max_horizon_hours = max_horizon;
  }
};

struct HyperFlags {
  int hidden = 0;
  double lr = 0.0;
  int max_epochs = 0;
  int batch_size = 0;
  int patience = 0;
  CLI::Option* hidden_opt = nullptr;
  CLI::Option* lr_opt = nullptr;
  CLI::Option* epochs_opt = nullptr;
  CLI::Option* batch_opt = nullptr;
  CLI::Option* patience_opt = nullptr;
  bool grid = false;
  int folds = 10;
  int jobs = 1;

  void Register(CLI::App* app) {
    hidden_opt = app->add_option("--hidden", hidden, "LSTM hidden size");
    lr_opt = app->add_option("--lr", lr, "Learning rate");
    epochs_opt = app->add_option("--max-epochs", max_epochs, "Epoch cap");
    batch_opt = app->add_option("--batch-size", batch_size, "Mini-batch size");
    patience_opt = app->add_option(
        "--patience", patience, "Consecutive val PR AUC drops before stopping");
    auto* grid_opt = app->add_flag(
        "--grid", grid, "Search hidden {10,100,1000} x lr {1e-4,1e-3,1e-2}");
    grid_opt->excludes(hidden_opt)->excludes(lr_opt);
    app->add_option("--folds", folds, "Cross-validation folds")
        ->check(CLI::Range(2, 1000));
    app->add_option("--jobs", jobs, "Concurrent fold trainings")
        ->check(CLI::Range(1, 1024));
  }

  void Apply(hemocult::HyperParams& hyper) const {
    if (*hidden_opt) hyper.hidden_size = hidden;
    if (*lr_opt) hyper.learning_rate = lr;
    if (*epochs_opt) hyper.max_epochs = max_epochs;
    if (*batch_opt) hyper.batch_size = batch_size;
    if (*patience_opt) hyper.patience = patience;
  }
};

int ExitCodeFor(const std::exception& e) {
  if (dynamic_cast<const hemocult::ConfigError*>(&e)) return 2;
  if (dynamic_cast<const hemocult::IoError*>(&e)) return 3;
  if (dynamic_cast<const hemocult::SchemaError*>(&e)) return 3;
  if (dynamic_cast<const hemocult::StratificationError*>(&e)) return 4;
  if (dynamic_cast<const hemocult::FitError*>(&e)) return 4;
  if (dynamic_cast<const hemocult::EmptySeriesError*>(&e)) return 4;
  if (dynamic_cast<const hemocult::TrainingError*>(&e)) return 5;
  if (dynamic_cast<const hemocult::ShapeError*>(&e)) return 6;
  if (dynamic_cast<const hemocult::ContractError*>(&e)) return 6;
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Positive blood culture prediction from ICU time series"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Progress on stderr");
  std::uint64_t seed = hemocult::kDefaultSeed;

  // generate
  auto* generate = app.add_subcommand("generate", "Write a synthetic cohort");
  std::string cohort_out;
  CohortFlags generate_cohort;
  generate->add_option("--out", cohort_out, "Cohort file")->required();
  generate->add_option("--seed", seed, "Master seed");
  generate_cohort.Register(generate);

  // preprocess
  auto* preprocess =
      app.add_subcommand("preprocess", "Split, normalize and tensorize");
  hemocult::PreprocessOptions prep_options;
  std::string prep_cohort;
  std::string prep_out;
  preprocess->add_option("--cohort", prep_cohort, "Cohort file")
      ->required();
  preprocess->add_option("--out-dir", prep_out, "Output directory")->required();
  preprocess->add_option("--test-fraction", prep_options.test_fraction,
                         "Held-out test fraction");
  preprocess->add_option("--seed", seed, "Master seed");

  // train
  auto* train = app.add_subcommand("train", "Cross-validate and fit ensemble");
  std::string train_prep;
  std::string train_run;
  HyperFlags train_hyper;
  train->add_option("--prep-dir", train_prep, "Preprocess output")
      ->required();
  train->add_option("--run-dir", train_run, "Run directory")->required();
  train->add_option("--seed", seed, "Master seed");
  train_hyper.Register(train);

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Test-set PR analysis");
  std::string eval_prep;
  std::string eval_run;
  std::string eval_out;
  evaluate->add_option("--prep-dir", eval_prep, "Preprocess output")
      ->required();
  evaluate->add_option("--run-dir", eval_run, "Run directory")
      ->required();
  evaluate->add_option("--out-dir", eval_out, "Report directory")->required();
  evaluate->add_option("--seed", seed, "Seed for the proportional baseline");

  // pipeline
  auto* pipeline = app.add_subcommand("pipeline", "All stages, one seed");
  std::string work_dir;
  bool quick = false;
  double pipeline_test_fraction = 0.10;
  CohortFlags pipeline_cohort;
  HyperFlags pipeline_hyper;
  pipeline->add_option("--work-dir", work_dir, "Output root")->required();
  pipeline->add_option("--seed", seed, "Master seed");
  pipeline->add_flag("--quick", quick,
                     "300 admissions, 40 positive, hidden 10, <= 20 epochs");
  pipeline->add_option("--test-fraction", pipeline_test_fraction,
                       "Held-out test fraction");
  pipeline_cohort.Register(pipeline);
  pipeline_hyper.Register(pipeline);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  std::ostream* log = verbose ? &std::cerr : nullptr;
  try {
    if (*generate) {
      hemocult::GenerateOptions options;
      options.cohort.seed = seed;
      generate_cohort.Apply(options.cohort);
      options.out = cohort_out;
      const auto summary = hemocult::RunGenerate(options, log);
      std::cout << "admissions=" << summary.admissions
                << " positives=" << summary.positives
                << " measurements=" << summary.measurements << '\n';
    } else if (*preprocess) {
      prep_options.cohort = prep_cohort;
      prep_options.out_dir = prep_out;
      prep_options.seed = seed;
      const auto summary = hemocult::RunPreprocess(prep_options, log);
      std::cout << "tensors=" << summary.tensors << " train=" << summary.train
                << " test=" << summary.test
                << " test_positives=" << summary.test_positives
                << " outliers_removed=" << summary.outliers_removed << '\n';
    } else if (*train) {
      hemocult::TrainOptions options;
      options.prep_dir = train_prep;
      options.run_dir = train_run;
      options.hyper.seed = seed;
      train_hyper.Apply(options.hyper);
      options.grid = train_hyper.grid;
      options.folds = train_hyper.folds;
      options.jobs = train_hyper.jobs;
      const auto summary = hemocult::RunTrain(options, log);
      std::cout << "hidden=" << summary.selected.hidden_size
                << " lr=" << FormatDouble(summary.selected.learning_rate)
                << " members=" << summary.members
                << " cv_rows=" << summary.cv_rows << " cv_mean_val_pr_auc="
                << FormatDouble(summary.cv_mean_val_pr_auc) << '\n';
    } else if (*evaluate) {
      hemocult::EvaluateOptions options;
      options.prep_dir = eval_prep;
      options.run_dir = eval_run;
      options.out_dir = eval_out;
      options.seed = seed;
      const auto report = hemocult::RunEvaluate(options, log);
      std::cout << "test_pr_auc=" << FormatDouble(report.test_pr_auc)
                << " baseline1=" << FormatDouble(report.baseline1_pr_auc)
                << " baseline2=" << FormatDouble(report.baseline2_pr_auc)
                << '\n';
    } else if (*pipeline) {
      hemocult::PipelineOptions options =
          quick ? hemocult::PipelineOptions::Quick()
                : hemocult::PipelineOptions{};
      options.work_dir = work_dir;
      options.seed = seed;
      options.test_fraction = pipeline_test_fraction;
      pipeline_cohort.Apply(options.cohort);
      pipeline_hyper.Apply(options.hyper);
      options.grid = pipeline_hyper.grid;
      options.folds = pipeline_hyper.folds;
      options.jobs = pipeline_hyper.jobs;
      const auto result = hemocult::RunPipeline(options, log);
      std::cout << result.summary_line << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "hemocult: " << e.what() << '\n';
    return ExitCodeFor(e);
  }
  return 0;
}
