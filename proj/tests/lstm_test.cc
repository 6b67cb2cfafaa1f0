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

#include "hemocult/lstm.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "hemocult/errors.h"
#include "oracles.h"

namespace hemocult {
namespace {

using testing::RandomParams;
using testing::RandomTensor;

TEST(CellStepTest, ZeroFixedPoint) {
  const CellParams p = CellParams::Zeros(3);
  const std::vector<double> x(9, 0.0), h(3, 0.0), c(3, 0.0);
  const CellState s = CellStep(x, h, c, p);
  for (int k = 0; k < 3; ++k) {
    EXPECT_EQ(s.c[k], 0.0);
    EXPECT_EQ(s.h[k], 0.0);
  }
}

TEST(CellStepTest, ZeroParamsHalveCellState) {
  const CellParams p = CellParams::Zeros(2);
  const std::vector<double> x(9, 0.3), h(2, 0.0), c = {0.8, -2.0};
  const CellState s = CellStep(x, h, c, p);
  for (int k = 0; k < 2; ++k) {
    EXPECT_DOUBLE_EQ(s.c[k], 0.5 * c[k]);
    EXPECT_DOUBLE_EQ(s.h[k], 0.5 * std::tanh(0.5 * c[k]));
  }
}

TEST(CellStepTest, SaturatedGates) {
  CellParams p = CellParams::Zeros(1);
  p.bias[kGateInput] = 20.0;
  p.bias[kGateOutput] = 20.0;
  p.bias[kGateForget] = -20.0;
  const std::vector<double> x(9, 0.0), h(1, 0.0), c(1, 0.5);
  CellState s = CellStep(x, h, c, p);
  EXPECT_NEAR(s.c[0], 0.0, 1e-8);
  EXPECT_NEAR(s.h[0], 0.0, 1e-8);
  p.bias[kGateCell] = 20.0;
  s = CellStep(x, h, c, p);
  EXPECT_NEAR(s.c[0], 1.0, 1e-8);
  EXPECT_NEAR(s.h[0], std::tanh(1.0), 1e-8);
  EXPECT_NEAR(s.h[0], 0.7616, 1e-4);
}

TEST(CellStepTest, DimensionMismatchIsShapeError) {
  const CellParams p = CellParams::Zeros(2);
  const std::vector<double> x(8, 0.0), h(2, 0.0), c(2, 0.0);
  EXPECT_THROW(CellStep(x, h, c, p), ShapeError);
}

TEST(ForwardTest, ZeroParamsScoreHalf) {
  std::mt19937_64 engine(3);
  EXPECT_EQ(Predict(RandomTensor(engine), ModelParams::Zeros(4)), 0.5);
}

TEST(ForwardTest, HeadBiasOnly) {
  std::mt19937_64 engine(4);
  ModelParams p = ModelParams::Zeros(2);
  p.head_bias = 10.0;
  EXPECT_NEAR(Predict(RandomTensor(engine), p), 0.9999546021312976, 1e-15);
}

TEST(ForwardTest, DirectionSwapSymmetryIsBitExact) {
  std::mt19937_64 engine(5);
  for (int hidden : {1, 2, 5, 10}) {
    const ModelParams p = RandomParams(hidden, 0.8, engine);
    const SampleTensor x = RandomTensor(engine);
    ModelParams swapped = p;
    std::swap(swapped.forward, swapped.backward);
    for (int k = 0; k < hidden; ++k) {
      swapped.head_weights[k] = p.head_weights[hidden + k];
      swapped.head_weights[hidden + k] = p.head_weights[k];
    }
    SampleTensor reversed = x;
    for (int t = 0; t < kSequenceLength; ++t) {
      for (int j = 0; j < kInputSize; ++j) {
        reversed.at(t, j) = x.at(kSequenceLength - 1 - t, j);
      }
    }
    EXPECT_EQ(Predict(x, p), Predict(reversed, swapped)) << hidden;
  }
}

TEST(ForwardTest, ScoreStrictlyInsideUnitInterval) {
  std::mt19937_64 engine(6);
  for (int i = 0; i < 50; ++i) {
    const double s = Predict(RandomTensor(engine, 3.0), RandomParams(3, 2.0, engine));
    EXPECT_GT(s, 0.0);
    EXPECT_LT(s, 1.0);
  }
}

TEST(ForwardTest, ShapeMismatch) {
  ModelParams p = ModelParams::Zeros(3);
  p.head_weights.pop_back();
  std::mt19937_64 engine(7);
  EXPECT_THROW(Forward(RandomTensor(engine), p), ShapeError);
}

TEST(WeightedMseTest, Examples) {
  const std::vector<double> perfect = {1.0, 0.0, 1.0};
  const std::vector<int> labels = {1, 0, 1};
  EXPECT_EQ(WeightedMse(perfect, labels, 8.0, 1.0), 0.0);
  EXPECT_EQ(WeightedMse(std::vector<double>{0.5}, std::vector<int>{1}, 8.0, 1.0), 2.0);
  const std::vector<double> scores = {0.2, 0.7, 0.9};
  EXPECT_DOUBLE_EQ(WeightedMse(scores, labels, 1.0, 1.0),
                   0.64 + 0.49 + 0.01);
  EXPECT_THROW(WeightedMse(scores, std::vector<int>{1, 0}, 1.0, 1.0), ShapeError);
}

TEST(WeightedMseTest, BatchEqualsSumOfExamplesExactly) {
  std::mt19937_64 engine(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> scores(37);
  std::vector<int> labels(37);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    scores[i] = u(engine);
    labels[i] = u(engine) < 0.3;
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    sum += WeightedMse(std::span(&scores[i], 1), std::span(&labels[i], 1), 8.0, 1.0);
  }
  EXPECT_EQ(WeightedMse(scores, labels, 8.0, 1.0), sum);
}

TEST(BackwardTest, ZeroParamsHeadBiasGradient) {
  std::mt19937_64 engine(9);
  const SampleTensor x = RandomTensor(engine);
  const ModelParams p = ModelParams::Zeros(3);
  const ForwardResult fwd = Forward(x, p);
  const BackwardResult r = Backward(x, 1, p, 8.0, 1.0, fwd.cache);
  EXPECT_EQ(r.loss, 2.0);
  EXPECT_DOUBLE_EQ(r.grads.head_bias, -2.0);
}

TEST(BackwardTest, SaturatedCorrectPredictionHasVanishingGradient) {
  std::mt19937_64 engine(10);
  const SampleTensor x = RandomTensor(engine);
  ModelParams p = RandomParams(3, 0.5, engine);
  p.head_bias = 50.0;
  const ForwardResult fwd = Forward(x, p);
  const BackwardResult r = Backward(x, 1, p, 8.0, 1.0, fwd.cache);
  for (double g : testing::Flatten(r.grads)) EXPECT_LE(std::abs(g), 1e-8);
}

TEST(ForwardTest, AgreesWithExtendedPrecisionReference) {
  std::mt19937_64 engine(15);
  for (int hidden : {1, 3, 8}) {
    for (int label : {0, 1}) {
      const ModelParams p = RandomParams(hidden, 1.0, engine);
      const SampleTensor x = RandomTensor(engine, 2.0);
      const double score = Predict(x, p);
      const double loss = (label ? 8.0 : 1.0) * (score - label) * (score - label);
      EXPECT_NEAR(loss, static_cast<double>(testing::ReferenceLoss(x, label, p, 8.0, 1.0)),
                  1e-13 * (1.0 + loss));
    }
  }
}

TEST(BackwardTest, MatchesCentralDifferences) {
  std::mt19937_64 engine(11);
  for (int hidden : {1, 2, 5}) {
    for (int trial = 0; trial < 3; ++trial) {
      const ModelParams p = RandomParams(hidden, 0.5, engine);
      const SampleTensor x = RandomTensor(engine);
      const int label = trial % 2;
      const ForwardResult fwd = Forward(x, p);
      const auto analytic = testing::Flatten(Backward(x, label, p, 8.0, 1.0, fwd.cache).grads);
      const auto numeric = testing::FiniteDifferenceGradient(x, label, p, 8.0, 1.0, 1e-5);
      ASSERT_EQ(analytic.size(), numeric.size());
      for (std::size_t i = 0; i < analytic.size(); ++i) {
        const double rel = std::abs(analytic[i] - numeric[i]) /
                           (std::abs(analytic[i]) + std::abs(numeric[i]) + 1e-12);
        EXPECT_LT(rel, 1e-6) << "hidden=" << hidden << " param=" << i;
      }
    }
  }
}

TEST(BackwardTest, StaleCacheIsContractViolation) {
  std::mt19937_64 engine(12);
  const SampleTensor x = RandomTensor(engine);
  ModelParams p = RandomParams(2, 0.5, engine);
  const ForwardResult fwd = Forward(x, p);
  const SampleTensor other = RandomTensor(engine);
  EXPECT_THROW(Backward(other, 1, p, 8.0, 1.0, fwd.cache), ContractError);
  p.forward.bias[0] += 1e-3;
  EXPECT_THROW(Backward(x, 1, p, 8.0, 1.0, fwd.cache), ContractError);
}

TEST(BackwardTest, Deterministic) {
  std::mt19937_64 engine(13);
  const SampleTensor x = RandomTensor(engine);
  const ModelParams p = RandomParams(4, 0.5, engine);
  const auto a = Backward(x, 0, p, 8.0, 1.0, Forward(x, p).cache);
  const auto b = Backward(x, 0, p, 8.0, 1.0, Forward(x, p).cache);
  EXPECT_EQ(a.loss, b.loss);
  EXPECT_EQ(a.grads, b.grads);
}

TEST(InitParamsTest, ConventionalScheme) {
  const ModelParams p = InitParams(16, 99);
  EXPECT_NO_THROW(p.CheckShape());
  const double bound = 0.25;
  for (const CellParams* cell : {&p.forward, &p.backward}) {
    for (double w : cell->input_weights) EXPECT_LE(std::abs(w), bound);
    for (double w : cell->recurrent_weights) EXPECT_LE(std::abs(w), bound);
    for (int r = 0; r < 4 * 16; ++r) {
      EXPECT_EQ(cell->bias[r], r / 16 == kGateForget ? 1.0 : 0.0);
    }
  }
  EXPECT_EQ(p.head_bias, 0.0);
  EXPECT_EQ(InitParams(16, 99), p);
  EXPECT_NE(InitParams(16, 100), p);
}

TEST(CheckpointTest, RoundTripIsBitIdentical) {
  testing::TempDir dir("ckpt");
  std::mt19937_64 engine(14);
  const ModelParams p = RandomParams(7, 1.0, engine);
  WriteCheckpoint(p, dir.path() / "m.ckpt");
  const ModelParams q = ReadCheckpoint(dir.path() / "m.ckpt");
  EXPECT_EQ(Fingerprint(q), Fingerprint(p));
  EXPECT_EQ(q, p);
}

TEST(CheckpointTest, RejectsForeignFile) {
  testing::TempDir dir("ckpt");
  std::ofstream(dir.path() / "bad.ckpt") << "#hemocult-tensors v1\n";
  EXPECT_THROW(ReadCheckpoint(dir.path() / "bad.ckpt"), IoError);
}

}  // namespace
}  // namespace hemocult
