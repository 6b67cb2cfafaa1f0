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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "hemocult/errors.h"
#include "oracles.h"

namespace hemocult {
namespace {

std::vector<int> Labels(std::size_t n, std::size_t positives) {
  std::vector<int> labels(n, 0);
  // Interleave so that class membership is unrelated to index order.
  for (std::size_t i = 0; i < positives; ++i) labels[(i * 7919) % n] = 1;
  return labels;
}

// Positives carry a rising ramp in the first variable over the last hours;
// `signal` = 0 makes the classes indistinguishable.
std::vector<SampleTensor> MakeTensors(std::size_t n, std::size_t positives,
                                      double signal, std::uint64_t seed) {
  std::mt19937_64 engine(seed);
  std::normal_distribution<double> noise(0.0, 0.1);
  const std::vector<int> labels = Labels(n, positives);
  std::vector<SampleTensor> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i].admission_id = "s" + std::to_string(i);
    out[i].label = labels[i];
    for (int t = 0; t < kNumBins; ++t) {
      for (int j = 0; j < kNumVariables; ++j) {
        double v = noise(engine);
        if (labels[i] == 1 && j == 0 && t >= 48) v += signal * (t - 47) / 24.0;
        out[i].at(t, j) = v;
      }
    }
  }
  return out;
}

TEST(StratifiedSplitTest, FullCohortArithmetic) {
  const std::vector<int> labels = Labels(2177, 229);
  const Split split = StratifiedSplit(labels, 0.10, 0);
  EXPECT_EQ(split.test.size(), 218u);
  EXPECT_EQ(split.train.size(), 1959u);
  std::size_t test_pos = 0;
  for (std::size_t i : split.test) test_pos += labels[i];
  EXPECT_EQ(test_pos, 23u);
  std::set<std::size_t> all(split.train.begin(), split.train.end());
  all.insert(split.test.begin(), split.test.end());
  EXPECT_EQ(all.size(), 2177u);
}

TEST(StratifiedSplitTest, HalfOfTen) {
  const std::vector<int> labels = Labels(10, 5);
  const Split split = StratifiedSplit(labels, 0.5, 1);
  ASSERT_EQ(split.test.size(), 5u);
  std::size_t test_pos = 0;
  for (std::size_t i : split.test) test_pos += labels[i];
  EXPECT_EQ(test_pos, 3u);  // round(2.5) rounds half up
}

TEST(StratifiedSplitTest, DeterministicPerSeed) {
  const std::vector<int> labels = Labels(500, 60);
  EXPECT_EQ(StratifiedSplit(labels, 0.1, 9).test, StratifiedSplit(labels, 0.1, 9).test);
  EXPECT_NE(StratifiedSplit(labels, 0.1, 9).test, StratifiedSplit(labels, 0.1, 10).test);
}

TEST(StratifiedSplitTest, Errors) {
  EXPECT_THROW(StratifiedSplit(std::vector<int>(10, 0), 0.1, 0), StratificationError);
  EXPECT_THROW(StratifiedSplit(std::vector<int>{}, 0.1, 0), StratificationError);
  EXPECT_THROW(StratifiedSplit(Labels(10, 5), 1.0, 0), ConfigError);
}

TEST(FoldsTest, TrainingPartitionOfFullCohort) {
  const std::vector<int> labels = Labels(1959, 206);
  const FoldPlan plan = MakeFolds(labels, 10, 3);
  ASSERT_EQ(plan.k(), 10u);
  std::set<std::size_t> seen;
  for (const auto& fold : plan.folds) {
    EXPECT_TRUE(fold.size() == 195 || fold.size() == 196) << fold.size();
    std::size_t pos = 0;
    for (std::size_t i : fold) pos += labels[i];
    EXPECT_TRUE(pos == 20 || pos == 21) << pos;
    seen.insert(fold.begin(), fold.end());
  }
  EXPECT_EQ(seen.size(), 1959u);
}

TEST(FoldsTest, MinimalBalancedCase) {
  const std::vector<int> labels = Labels(20, 10);
  const FoldPlan plan = MakeFolds(labels, 10, 0);
  for (const auto& fold : plan.folds) {
    ASSERT_EQ(fold.size(), 2u);
    EXPECT_EQ(labels[fold[0]] + labels[fold[1]], 1);
  }
}

TEST(FoldsTest, ComplementAndDeterminism) {
  const std::vector<int> labels = Labels(100, 30);
  const FoldPlan plan = MakeFolds(labels, 5, 2);
  const auto rest = plan.Complement(1);
  EXPECT_EQ(rest.size() + plan.folds[1].size(), 100u);
  for (std::size_t i : plan.folds[1]) {
    EXPECT_FALSE(std::binary_search(rest.begin(), rest.end(), i));
  }
  EXPECT_EQ(MakeFolds(labels, 5, 2).folds, plan.folds);
  EXPECT_THROW(MakeFolds(Labels(30, 4), 5, 0), StratificationError);
}

TEST(FoldsTest, PositiveCountsDifferByAtMostOne) {
  std::mt19937_64 engine(5);
  for (int trial = 0; trial < 100; ++trial) {
    const int k = std::uniform_int_distribution<int>(2, 10)(engine);
    const std::size_t pos = std::uniform_int_distribution<std::size_t>(k, 80)(engine);
    const std::size_t n = pos + std::uniform_int_distribution<std::size_t>(k, 300)(engine);
    const std::vector<int> labels = Labels(n, pos);
    const FoldPlan plan = MakeFolds(labels, k, trial);
    std::size_t lo = n, hi = 0, lo_size = n, hi_size = 0;
    for (const auto& fold : plan.folds) {
      std::size_t p = 0;
      for (std::size_t i : fold) p += labels[i];
      lo = std::min(lo, p);
      hi = std::max(hi, p);
      lo_size = std::min(lo_size, fold.size());
      hi_size = std::max(hi_size, fold.size());
    }
    EXPECT_LE(hi - lo, 1u);
    EXPECT_LE(hi_size - lo_size, 1u);
  }
}

TEST(EarlyStoppingTest, StopsOnFirstDecrease) {
  EarlyStopping stop(150, 0.90, 1);
  EXPECT_FALSE(stop.Update(0.4));
  EXPECT_FALSE(stop.Update(0.55));
  EXPECT_TRUE(stop.Update(0.52));
  EXPECT_EQ(stop.best_epoch(), 2);
  EXPECT_EQ(stop.best_score(), 0.55);
}

TEST(EarlyStoppingTest, StopsAboveTarget) {
  EarlyStopping stop(150, 0.90, 1);
  EXPECT_TRUE(stop.Update(0.93));
  EXPECT_EQ(stop.best_epoch(), 1);
  EarlyStopping at_target(150, 0.90, 1);
  EXPECT_FALSE(at_target.Update(0.90));  // strictly greater is required
}

TEST(EarlyStoppingTest, PlateauDoesNotStopAndCapDoes) {
  EarlyStopping stop(4, 0.90, 1);
  EXPECT_FALSE(stop.Update(0.5));
  EXPECT_FALSE(stop.Update(0.5));
  EXPECT_FALSE(stop.Update(0.6));
  EXPECT_TRUE(stop.Update(0.7));
  EarlyStopping patient(150, 0.90, 2);
  EXPECT_FALSE(patient.Update(0.5));
  EXPECT_FALSE(patient.Update(0.4));
  EXPECT_FALSE(patient.Update(0.45));
  EXPECT_FALSE(patient.Update(0.44));
  EXPECT_TRUE(patient.Update(0.43));
  EXPECT_EQ(patient.best_epoch(), 1);
}

HyperParams Tiny() {
  HyperParams h;
  h.hidden_size = 2;
  h.learning_rate = 0.05;
  h.max_epochs = 5;
  h.batch_size = 8;
  return h;
}

TEST(TrainOneTest, ReturnsParametersOfBestEpoch) {
  const auto data = MakeTensors(40, 10, 1.0, 1);
  const std::vector<double> script = {0.4, 0.55, 0.52};
  std::vector<ModelParams> snapshots;
  const ValidationScorer scorer = [&](const ModelParams& p, int epoch) {
    snapshots.push_back(p);
    return script.at(epoch - 1);
  };
  const TrainResult r = TrainOne(data, data, Tiny(), scorer);
  ASSERT_EQ(snapshots.size(), 3u);
  EXPECT_EQ(r.history, script);
  EXPECT_EQ(r.best_epoch, 2);
  EXPECT_EQ(r.best_val_pr_auc, 0.55);
  EXPECT_EQ(r.params, snapshots[1]);
  EXPECT_NE(r.params, snapshots[2]);
}

TEST(TrainOneTest, TargetReachedStopsAfterFirstEpoch) {
  const auto data = MakeTensors(40, 10, 1.0, 2);
  std::vector<ModelParams> snapshots;
  const TrainResult r = TrainOne(data, data, Tiny(), [&](const ModelParams& p, int) {
    snapshots.push_back(p);
    return 0.93;
  });
  EXPECT_EQ(r.history.size(), 1u);
  EXPECT_EQ(r.params, snapshots[0]);
}

TEST(TrainOneTest, TrainingLossDecreases) {
  const auto data = MakeTensors(40, 10, 1.0, 3);
  HyperParams h = Tiny();
  h.hidden_size = 4;
  h.learning_rate = 0.1;
  const TrainResult r = TrainOne(data, data, h, [](const ModelParams&, int) { return 0.0; });
  ASSERT_EQ(r.train_loss.size(), 5u);
  EXPECT_LT(r.train_loss.back(), r.train_loss.front());
  EXPECT_LT(MeanLoss(data, r.params, h.w_pos, h.w_neg),
            MeanLoss(data, InitParams(h.hidden_size, h.seed), h.w_pos, h.w_neg));
}

TEST(TrainOneTest, DeterministicForFixedSeed) {
  const auto data = MakeTensors(30, 8, 1.0, 4);
  const TrainResult a = TrainOne(data, data, Tiny());
  const TrainResult b = TrainOne(data, data, Tiny());
  EXPECT_EQ(a.params, b.params);
  EXPECT_EQ(a.history, b.history);
}

TEST(TrainOneTest, DivergenceIsTrainingError) {
  auto data = MakeTensors(30, 8, 1.0, 5);
  data[3].values[100] = std::nan("");
  try {
    TrainOne(data, data, Tiny(), [](const ModelParams&, int) { return 0.0; });
    FAIL() << "expected TrainingError";
  } catch (const TrainingError& e) {
    EXPECT_GE(e.epoch(), 1);
    EXPECT_FALSE(std::isfinite(e.loss()));
  }
}

TEST(TrainOneTest, RejectsBadHyperParams) {
  const auto data = MakeTensors(10, 3, 1.0, 6);
  HyperParams h = Tiny();
  h.batch_size = 0;
  EXPECT_THROW(TrainOne(data, data, h), ConfigError);
  h = Tiny();
  h.w_pos = -1;
  EXPECT_THROW(TrainOne(data, data, h), ConfigError);
}

TEST(ClassWeightTest, OnePositiveBalancesEightNegatives) {
  std::mt19937_64 engine(7);
  const ModelParams p = ModelParams::Zeros(3);
  Gradients sum = Gradients::Zeros(3);
  SampleTensor pos = testing::RandomTensor(engine);
  BackwardAccumulate(pos, 1, p, 8.0, 1.0, Forward(pos, p).cache, 1.0, sum);
  const double pos_bias = sum.head_bias;
  for (int i = 0; i < 8; ++i) {
    SampleTensor neg = testing::RandomTensor(engine);
    BackwardAccumulate(neg, 0, p, 8.0, 1.0, Forward(neg, p).cache, 1.0, sum);
  }
  EXPECT_EQ(pos_bias, -2.0);
  EXPECT_EQ(sum.head_bias, 0.0);
}

TEST(GridSearchTest, SingleCellAndRecords) {
  const auto data = MakeTensors(40, 12, 1.0, 8);
  std::vector<int> labels;
  for (const auto& t : data) labels.push_back(t.label);
  const FoldPlan folds = MakeFolds(labels, 3, 0);
  const std::vector<HyperParams> grid = {Tiny()};
  const GridResult r = GridSearch(data, folds, grid);
  ASSERT_EQ(r.cells.size(), 1u);
  ASSERT_EQ(r.records.size(), 3u);
  double sum = 0.0;
  for (int i = 0; i < 3; ++i) {
    EXPECT_EQ(r.records[i].fold, i);
    sum += r.records[i].val_pr_auc;
  }
  EXPECT_DOUBLE_EQ(r.cells[0].mean_val_pr_auc, sum / 3.0);
  EXPECT_EQ(r.best.hidden_size, 2);
}

TEST(GridSearchTest, PrefersLearningCellAndBreaksTies) {
  const auto data = MakeTensors(60, 15, 3.0, 9);
  std::vector<int> labels;
  for (const auto& t : data) labels.push_back(t.label);
  const FoldPlan folds = MakeFolds(labels, 3, 1);
  HyperParams frozen = Tiny();
  frozen.learning_rate = 1e-12;
  frozen.max_epochs = 1;
  HyperParams learner = Tiny();
  learner.hidden_size = 3;
  learner.learning_rate = 0.5;
  learner.max_epochs = 20;
  learner.batch_size = 4;
  const std::vector<HyperParams> grid = {frozen, learner};
  const GridResult r = GridSearch(data, folds, grid);
  EXPECT_GT(r.cells[1].mean_val_pr_auc, r.cells[0].mean_val_pr_auc);
  EXPECT_EQ(r.best.hidden_size, 3);

  // Identical scores: the smaller hidden size wins, then the smaller rate.
  HyperParams a = Tiny(), b = Tiny(), c = Tiny();
  a.hidden_size = 4;
  b.learning_rate = 0.02;
  c.learning_rate = 0.01;
  for (HyperParams* h : {&a, &b, &c}) h->target_pr_auc = -1.0;  // stop at once
  // All cells stop after one epoch; force equal scores with a constant data set.
  auto constant = data;
  for (auto& t : constant) t.values.fill(0.0);
  const std::vector<HyperParams> tied = {a, b, c};
  const GridResult t = GridSearch(constant, folds, tied);
  EXPECT_EQ(t.cells[0].mean_val_pr_auc, t.cells[1].mean_val_pr_auc);
  EXPECT_EQ(t.best.hidden_size, 2);
  EXPECT_EQ(t.best.learning_rate, 0.01);
}

TEST(GridSearchTest, ParallelMatchesSerial) {
  const auto data = MakeTensors(40, 12, 1.0, 10);
  std::vector<int> labels;
  for (const auto& t : data) labels.push_back(t.label);
  const FoldPlan folds = MakeFolds(labels, 4, 0);
  const std::vector<HyperParams> grid = {Tiny()};
  const GridResult serial = GridSearch(data, folds, grid, 1);
  const GridResult parallel = GridSearch(data, folds, grid, 3);
  ASSERT_EQ(serial.records.size(), parallel.records.size());
  for (std::size_t i = 0; i < serial.records.size(); ++i) {
    EXPECT_EQ(serial.records[i].val_pr_auc, parallel.records[i].val_pr_auc);
    EXPECT_EQ(serial.records[i].best_epoch, parallel.records[i].best_epoch);
  }
}

class EnsembleTest : public ::testing::Test {
 protected:
  void SetUp() override {
    data_ = MakeTensors(60, 20, 1.0, 11);
    std::vector<int> labels;
    for (const auto& t : data_) labels.push_back(t.label);
    folds_ = MakeFolds(labels, 10, 0);
    hyper_ = Tiny();
    hyper_.max_epochs = 2;
  }
  std::vector<SampleTensor> data_;
  FoldPlan folds_;
  HyperParams hyper_;
};

TEST_F(EnsembleTest, TenDistinctDeterministicMembers) {
  const EnsembleFit a = FitEnsemble(data_, folds_, hyper_, NormStats{});
  const EnsembleFit b = FitEnsemble(data_, folds_, hyper_, NormStats{});
  ASSERT_EQ(a.ensemble.members.size(), 10u);
  ASSERT_EQ(a.records.size(), 10u);
  for (std::size_t i = 0; i < 10; ++i) {
    EXPECT_EQ(a.ensemble.members[i], b.ensemble.members[i]);
    for (std::size_t j = i + 1; j < 10; ++j) {
      EXPECT_NE(a.ensemble.members[i], a.ensemble.members[j]);
    }
  }
}

TEST_F(EnsembleTest, MemberSeedIsBaseSeedPlusFold) {
  const EnsembleFit fit = FitEnsemble(data_, folds_, hyper_, NormStats{});
  HyperParams h = hyper_;
  h.seed = hyper_.seed + 3;
  std::vector<SampleTensor> train, val;
  for (std::size_t i : folds_.Complement(3)) train.push_back(data_[i]);
  for (std::size_t i : folds_.folds[3]) val.push_back(data_[i]);
  EXPECT_EQ(TrainOne(train, val, h).params, fit.ensemble.members[3]);
}

TEST(EnsemblePredictTest, MeanOfMembers) {
  ModelParams a = ModelParams::Zeros(1), b = ModelParams::Zeros(1);
  a.head_bias = std::log(0.2 / 0.8);
  b.head_bias = std::log(0.4 / 0.6);
  Ensemble e;
  e.members = {a, b};
  std::mt19937_64 engine(12);
  const SampleTensor x = testing::RandomTensor(engine);
  EXPECT_NEAR(EnsemblePredict(e, x), 0.3, 1e-12);
  EXPECT_THROW(EnsemblePredict(Ensemble{}, x), ContractError);
}

TEST(EnsemblePredictTest, PermutationInvariantBitForBit) {
  std::mt19937_64 engine(13);
  Ensemble e;
  for (int i = 0; i < 10; ++i) e.members.push_back(testing::RandomParams(2, 1.0, engine));
  const SampleTensor x = testing::RandomTensor(engine);
  const double reference = EnsemblePredict(e, x);
  for (int trial = 0; trial < 20; ++trial) {
    std::shuffle(e.members.begin(), e.members.end(), engine);
    EXPECT_EQ(EnsemblePredict(e, x), reference);
  }
}

}  // namespace
}  // namespace hemocult
