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

// Model selection and ensembling: stratified hold-out split, stratified
// k-fold cross-validation, a hidden-size x learning-rate grid, per-epoch
// early stopping on validation PR AUC, and the k-member fold ensemble.

#ifndef HEMOCULT_TRAIN_H_
#define HEMOCULT_TRAIN_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "hemocult/lstm.h"
#include "hemocult/prep.h"

namespace hemocult {

struct HyperParams {
  int hidden_size = 10;
  double learning_rate = 0.01;
  int max_epochs = 150;
  double w_pos = 8.0;
  double w_neg = 1.0;
  int batch_size = 32;
  std::uint64_t seed = 0;
  // Consecutive epoch-over-epoch decreases tolerated before stopping.
  int patience = 1;
  // Training stops once validation PR AUC exceeds this.
  double target_pr_auc = 0.90;

  void Validate() const;
};

// hidden {10, 100, 1000} x learning rate {1e-4, 1e-3, 1e-2}, every other
// field copied from `base`.
std::vector<HyperParams> DefaultGrid(const HyperParams& base);

struct Split {
  std::vector<std::size_t> train;  // indices into the input, ascending
  std::vector<std::size_t> test;
};

// Test set of round(f * n) items holding round(f * n_pos) positives
// (round half up); negatives fill the remainder.
Split StratifiedSplit(std::span<const int> labels, double test_fraction,
                      std::uint64_t seed);

struct FoldPlan {
  // Indices into the training set, ascending within each fold.
  std::vector<std::vector<std::size_t>> folds;

  std::size_t k() const { return folds.size(); }
  // Everything except fold `i`.
  std::vector<std::size_t> Complement(std::size_t i) const;
};

FoldPlan MakeFolds(std::span<const int> labels, int k, std::uint64_t seed);

// Tracks the validation history and decides when to stop: after the target
// is exceeded, after `patience` consecutive strict decreases, or at
// `max_epochs`.
class EarlyStopping {
 public:
  EarlyStopping(int max_epochs, double target, int patience);

  // Records the score of the epoch just finished. Returns true to stop.
  bool Update(double score);

  const std::vector<double>& history() const { return history_; }
  int best_epoch() const { return best_epoch_; }  // 1-based, 0 before Update
  double best_score() const { return best_score_; }
  bool last_was_best() const {
    return best_epoch_ == static_cast<int>(history_.size());
  }

 private:
  int max_epochs_;
  double target_;
  int patience_;
  int decreases_ = 0;
  int best_epoch_ = 0;
  double best_score_ = 0.0;
  std::vector<double> history_;
};

// Returns the validation PR AUC of `params` after epoch `epoch` (1-based).
using ValidationScorer =
    std::function<double(const ModelParams& params, int epoch)>;

struct TrainResult {
  ModelParams params;  // from the best epoch
  std::vector<double> history;  // validation PR AUC per epoch
  std::vector<double> train_loss;  // mean weighted loss per epoch
  int best_epoch = 0;
  double best_val_pr_auc = 0.0;
};

// Mini-batch gradient descent on the mean per-batch weighted squared error.
// `scorer` defaults to the PR AUC of `val`. Throws TrainingError on a
// non-finite loss.
TrainResult TrainOne(std::span<const SampleTensor> train,
                     std::span<const SampleTensor> val,
                     const HyperParams& hyper,
                     const ValidationScorer& scorer = nullptr);

// Mean of w_y * (score - y)^2 over `tensors`.
double MeanLoss(std::span<const SampleTensor> tensors, const ModelParams& p,
                double w_pos, double w_neg);

std::vector<double> PredictAll(std::span<const SampleTensor> tensors,
                               const ModelParams& p);

struct CvRecord {
  int hidden_size = 0;
  double learning_rate = 0.0;
  int fold = 0;
  int best_epoch = 0;
  double val_pr_auc = 0.0;
  int epochs_run = 0;
};

struct GridCell {
  HyperParams hyper;
  double mean_val_pr_auc = 0.0;
};

struct GridResult {
  HyperParams best;
  std::vector<GridCell> cells;
  std::vector<CvRecord> records;
};

// Trains k models per cell (fold i validates, the rest train) and picks the
// cell with the highest mean best-epoch validation PR AUC. Ties prefer the
// smaller hidden size, then the smaller learning rate. Fold i trains with
// seed hyper.seed + i. At most `jobs` folds train concurrently.
GridResult GridSearch(std::span<const SampleTensor> train,
                      const FoldPlan& folds,
                      std::span<const HyperParams> grid, int jobs = 1);

struct Ensemble {
  std::vector<ModelParams> members;
  NormStats stats;
};

struct EnsembleFit {
  Ensemble ensemble;
  std::vector<CvRecord> records;
};

EnsembleFit FitEnsemble(std::span<const SampleTensor> train,
                        const FoldPlan& folds, const HyperParams& hyper,
                        const NormStats& stats, int jobs = 1);

// Mean member score. Member scores are summed in ascending order, so the
// result does not depend on member order.
double EnsemblePredict(const Ensemble& ensemble, const SampleTensor& tensor);

}  // namespace hemocult

#endif  // HEMOCULT_TRAIN_H_
