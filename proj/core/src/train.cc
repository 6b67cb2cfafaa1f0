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

#include "hemocult/train.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include "hemocult/errors.h"
#include "hemocult/eval.h"

namespace hemocult {
namespace {

std::size_t RoundHalfUp(double x) {
  return static_cast<std::size_t>(std::floor(x + 0.5));
}

// Runs task(0..count-1) on up to `jobs` threads. The first exception thrown
// by any task is rethrown after all workers finish.
void ParallelFor(std::size_t count, int jobs,
                 const std::function<void(std::size_t)>& task) {
  const std::size_t workers =
      std::min<std::size_t>(count, static_cast<std::size_t>(std::max(jobs, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> threads;
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          task(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (std::thread& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);
}

std::vector<SampleTensor> Gather(std::span<const SampleTensor> tensors,
                                 std::span<const std::size_t> indices) {
  std::vector<SampleTensor> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(tensors[i]);
  return out;
}

std::vector<int> Labels(std::span<const SampleTensor> tensors) {
  std::vector<int> labels;
  labels.reserve(tensors.size());
  for (const SampleTensor& t : tensors) labels.push_back(t.label);
  return labels;
}

void AddScaled(ModelParams& p, const Gradients& g, double step) {
  auto params = p.Blocks();
  const auto grads = g.Blocks();
  for (std::size_t b = 0; b < params.size(); ++b) {
    std::span<double> values = params[b].values;
    std::span<const double> deltas = grads[b].values;
    for (std::size_t i = 0; i < values.size(); ++i) {
      values[i] -= step * deltas[i];
    }
  }
}

bool AllFinite(const ModelParams& p) {
  for (const ConstParamBlock& block : p.Blocks()) {
    for (double v : block.values) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

void ZeroFill(Gradients& g) {
  for (ParamBlock& block : g.Blocks()) {
    std::fill(block.values.begin(), block.values.end(), 0.0);
  }
}

struct FoldOutcome {
  TrainResult result;
  CvRecord record;
};

FoldOutcome TrainFold(std::span<const SampleTensor> train,
                      const FoldPlan& folds, std::size_t fold,
                      const HyperParams& base) {
  HyperParams hyper = base;
  hyper.seed = base.seed + fold;
  const std::vector<SampleTensor> fold_train =
      Gather(train, folds.Complement(fold));
  const std::vector<SampleTensor> fold_val = Gather(train, folds.folds[fold]);
  FoldOutcome outcome;
  try {
    outcome.result = TrainOne(fold_train, fold_val, hyper);
  } catch (const TrainingError& e) {
    std::ostringstream what;
    what << "cell hidden=" << base.hidden_size << " lr=" << base.learning_rate
         << " fold=" << fold << ": " << e.what();
    throw TrainingError(what.str(), e.epoch(), e.loss());
  }
  outcome.record = {base.hidden_size,
                    base.learning_rate,
                    static_cast<int>(fold),
                    outcome.result.best_epoch,
                    outcome.result.best_val_pr_auc,
                    static_cast<int>(outcome.result.history.size())};
  return outcome;
}

std::vector<FoldOutcome> TrainAllFolds(std::span<const SampleTensor> train,
                                       const FoldPlan& folds,
                                       const HyperParams& hyper, int jobs) {
  std::vector<FoldOutcome> outcomes(folds.k());
  ParallelFor(folds.k(), jobs, [&](std::size_t fold) {
    outcomes[fold] = TrainFold(train, folds, fold, hyper);
  });
  return outcomes;
}

}  // namespace

void HyperParams::Validate() const {
  if (hidden_size < 1) throw ConfigError("hidden_size must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning_rate must be positive");
  }
  if (max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
  if (!(w_pos > 0.0) || !(w_neg > 0.0)) {
    throw ConfigError("class weights must be positive");
  }
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (patience < 1) throw ConfigError("patience must be >= 1");
}

std::vector<HyperParams> DefaultGrid(const HyperParams& base) {
  std::vector<HyperParams> grid;
  for (int hidden : {10, 100, 1000}) {
    for (double lr : {0.0001, 0.001, 0.01}) {
      HyperParams cell = base;
      cell.hidden_size = hidden;
      cell.learning_rate = lr;
      grid.push_back(cell);
    }
  }
  return grid;
}

Split StratifiedSplit(std::span<const int> labels, double test_fraction,
                      std::uint64_t seed) {
  if (labels.empty()) throw StratificationError("empty cohort");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ConfigError("test fraction must lie in (0, 1)");
  }
  std::vector<std::size_t> positives;
  std::vector<std::size_t> negatives;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    (labels[i] == 1 ? positives : negatives).push_back(i);
  }
  if (positives.empty() || negatives.empty()) {
    throw StratificationError("stratified split needs both classes");
  }
  const std::size_t n_test =
      RoundHalfUp(test_fraction * static_cast<double>(labels.size()));
  const std::size_t pos_test = std::min(
      positives.size(),
      RoundHalfUp(test_fraction * static_cast<double>(positives.size())));
  const std::size_t neg_test = std::min(negatives.size(), n_test - pos_test);

  std::mt19937_64 engine(seed);
  std::shuffle(positives.begin(), positives.end(), engine);
  std::shuffle(negatives.begin(), negatives.end(), engine);

  std::vector<bool> in_test(labels.size(), false);
  for (std::size_t i = 0; i < pos_test; ++i) in_test[positives[i]] = true;
  for (std::size_t i = 0; i < neg_test; ++i) in_test[negatives[i]] = true;
  Split split;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    (in_test[i] ? split.test : split.train).push_back(i);
  }
  return split;
}

std::vector<std::size_t> FoldPlan::Complement(std::size_t i) const {
  std::vector<std::size_t> out;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    if (f != i) out.insert(out.end(), folds[f].begin(), folds[f].end());
  }
  std::sort(out.begin(), out.end());
  return out;
}

FoldPlan MakeFolds(std::span<const int> labels, int k, std::uint64_t seed) {
  if (k < 2) throw ConfigError("need at least 2 folds");
  std::vector<std::size_t> positives;
  std::vector<std::size_t> negatives;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    (labels[i] == 1 ? positives : negatives).push_back(i);
  }
  const auto ku = static_cast<std::size_t>(k);
  if (positives.size() < ku || negatives.size() < ku) {
    throw StratificationError("each class needs at least " +
                              std::to_string(k) + " members");
  }
  std::mt19937_64 engine(seed);
  std::shuffle(positives.begin(), positives.end(), engine);
  std::shuffle(negatives.begin(), negatives.end(), engine);

  // Deal positives round-robin, then continue dealing negatives where the
  // positives stopped so fold sizes stay within one of each other.
  FoldPlan plan;
  plan.folds.resize(ku);
  for (std::size_t i = 0; i < positives.size(); ++i) {
    plan.folds[i % ku].push_back(positives[i]);
  }
  for (std::size_t j = 0; j < negatives.size(); ++j) {
    plan.folds[(positives.size() + j) % ku].push_back(negatives[j]);
  }
  for (auto& fold : plan.folds) std::sort(fold.begin(), fold.end());
  return plan;
}

EarlyStopping::EarlyStopping(int max_epochs, double target, int patience)
    : max_epochs_(max_epochs), target_(target), patience_(patience) {}

bool EarlyStopping::Update(double score) {
  if (!history_.empty() && score < history_.back()) {
    ++decreases_;
  } else {
    decreases_ = 0;
  }
  history_.push_back(score);
  if (best_epoch_ == 0 || score > best_score_) {
    best_score_ = score;
    best_epoch_ = static_cast<int>(history_.size());
  }
  return score > target_ || decreases_ >= patience_ ||
         static_cast<int>(history_.size()) >= max_epochs_;
}

double MeanLoss(std::span<const SampleTensor> tensors, const ModelParams& p,
                double w_pos, double w_neg) {
  if (tensors.empty()) return 0.0;
  const std::vector<double> scores = PredictAll(tensors, p);
  const std::vector<int> labels = Labels(tensors);
  return WeightedMse(scores, labels, w_pos, w_neg) /
         static_cast<double>(tensors.size());
}

std::vector<double> PredictAll(std::span<const SampleTensor> tensors,
                               const ModelParams& p) {
  std::vector<double> scores;
  scores.reserve(tensors.size());
  for (const SampleTensor& t : tensors) scores.push_back(Predict(t, p));
  return scores;
}

TrainResult TrainOne(std::span<const SampleTensor> train,
                     std::span<const SampleTensor> val,
                     const HyperParams& hyper,
                     const ValidationScorer& scorer) {
  hyper.Validate();
  if (train.empty() || val.empty()) {
    throw ConfigError("training and validation sets must be nonempty");
  }
  const std::vector<int> val_labels = Labels(val);
  ValidationScorer score_epoch = scorer;
  if (!score_epoch) {
    if (std::count(val_labels.begin(), val_labels.end(), 1) == 0) {
      throw ConfigError("validation set has no positive example");
    }
    score_epoch = [&](const ModelParams& params, int) {
      return PrAuc(PredictAll(val, params), val_labels);
    };
  }

  ModelParams params = InitParams(hyper.hidden_size, hyper.seed);
  Gradients grads = Gradients::Zeros(hyper.hidden_size);
  std::mt19937_64 shuffle_engine(hyper.seed ^ 0x9e3779b97f4a7c15ull);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  EarlyStopping stopping(hyper.max_epochs, hyper.target_pr_auc,
                         hyper.patience);
  TrainResult result;
  result.params = params;
  for (int epoch = 1; epoch <= hyper.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_engine);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(hyper.batch_size)) {
      const std::size_t end = std::min(
          order.size(), start + static_cast<std::size_t>(hyper.batch_size));
      const double scale = 1.0 / static_cast<double>(end - start);
      ZeroFill(grads);
      double batch_loss = 0.0;
      for (std::size_t b = start; b < end; ++b) {
        const SampleTensor& tensor = train[order[b]];
        const ForwardResult fwd = Forward(tensor, params);
        batch_loss += BackwardAccumulate(tensor, tensor.label, params,
                                         hyper.w_pos, hyper.w_neg, fwd.cache,
                                         scale, grads);
      }
      if (!std::isfinite(batch_loss)) {
        throw TrainingError("non-finite training loss at epoch " +
                                std::to_string(epoch),
                            epoch, batch_loss);
      }
      epoch_loss += batch_loss;
      AddScaled(params, grads, hyper.learning_rate);
      if (!AllFinite(params)) {
        throw TrainingError("non-finite parameters at epoch " +
                                std::to_string(epoch),
                            epoch, batch_loss);
      }
    }
    result.train_loss.push_back(epoch_loss / static_cast<double>(train.size()));

    const bool stop = stopping.Update(score_epoch(params, epoch));
    if (stopping.last_was_best()) result.params = params;
    if (stop) break;
  }
  result.history = stopping.history();
  result.best_epoch = stopping.best_epoch();
  result.best_val_pr_auc = stopping.best_score();
  return result;
}

GridResult GridSearch(std::span<const SampleTensor> train,
                      const FoldPlan& folds,
                      std::span<const HyperParams> grid, int jobs) {
  if (grid.empty()) throw ConfigError("empty hyperparameter grid");
  GridResult result;
  const GridCell* best = nullptr;
  for (const HyperParams& hyper : grid) {
    hyper.Validate();
    const std::vector<FoldOutcome> outcomes =
        TrainAllFolds(train, folds, hyper, jobs);
    double sum = 0.0;
    for (const FoldOutcome& o : outcomes) {
      sum += o.record.val_pr_auc;
      result.records.push_back(o.record);
    }
    result.cells.push_back({hyper, sum / static_cast<double>(outcomes.size())});
  }
  for (const GridCell& cell : result.cells) {
    if (best == nullptr || cell.mean_val_pr_auc > best->mean_val_pr_auc) {
      best = &cell;
      continue;
    }
    if (cell.mean_val_pr_auc == best->mean_val_pr_auc) {
      const bool smaller =
          cell.hyper.hidden_size < best->hyper.hidden_size ||
          (cell.hyper.hidden_size == best->hyper.hidden_size &&
           cell.hyper.learning_rate < best->hyper.learning_rate);
      if (smaller) best = &cell;
    }
  }
  result.best = best->hyper;
  return result;
}

EnsembleFit FitEnsemble(std::span<const SampleTensor> train,
                        const FoldPlan& folds, const HyperParams& hyper,
                        const NormStats& stats, int jobs) {
  hyper.Validate();
  std::vector<FoldOutcome> outcomes = TrainAllFolds(train, folds, hyper, jobs);
  EnsembleFit fit;
  fit.ensemble.stats = stats;
  for (FoldOutcome& o : outcomes) {
    fit.ensemble.members.push_back(std::move(o.result.params));
    fit.records.push_back(o.record);
  }
  return fit;
}

double EnsemblePredict(const Ensemble& ensemble, const SampleTensor& tensor) {
  if (ensemble.members.empty()) throw ContractError("empty ensemble");
  std::vector<double> scores;
  scores.reserve(ensemble.members.size());
  for (const ModelParams& member : ensemble.members) {
    scores.push_back(Predict(tensor, member));
  }
  std::sort(scores.begin(), scores.end());
  double sum = 0.0;
  for (double s : scores) sum += s;
  return sum / static_cast<double>(scores.size());
}

}  // namespace hemocult
