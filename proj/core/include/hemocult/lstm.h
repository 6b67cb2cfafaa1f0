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

// Bidirectional LSTM classifier with exact backpropagation through time.
//
// Each direction runs the standard cell (no peepholes)
//
//   i = sigmoid(W_i x + U_i h + b_i)     f = sigmoid(W_f x + U_f h + b_f)
//   g = tanh(W_g x + U_g h + b_g)        o = sigmoid(W_o x + U_o h + b_o)
//   c' = f * c + i * g                   h' = o * tanh(c')
//
// from zero state, the forward cell over hours 0..71 and the backward cell
// over hours 71..0. The score is
//
//   sigmoid(v_fwd . h_fwd + v_bwd . h_bwd + c)
//
// where h_fwd and h_bwd are the final hidden states of the two cells.
//
// Parameter layout: gate rows are stacked in the order i, f, g, o, so the
// input weights of a cell form a (4H x 9) row-major matrix, the recurrent
// weights a (4H x H) matrix and the bias a 4H vector. The head holds 2H
// weights (forward half first) and one bias.

#ifndef HEMOCULT_LSTM_H_
#define HEMOCULT_LSTM_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "hemocult/errors.h"
#include "hemocult/prep.h"

namespace hemocult {

inline constexpr int kNumGates = 4;
inline constexpr int kInputSize = kNumVariables;
inline constexpr int kSequenceLength = kNumBins;
inline constexpr char kCheckpointHeader[] = "#hemocult-model v1";

enum Gate : int { kGateInput = 0, kGateForget = 1, kGateCell = 2, kGateOutput = 3 };

struct CellParams {
  int hidden_size = 0;
  std::vector<double> input_weights;      // 4H x 9
  std::vector<double> recurrent_weights;  // 4H x H
  std::vector<double> bias;               // 4H

  static CellParams Zeros(int hidden_size);
  // Throws ShapeError if the buffers disagree with hidden_size.
  void CheckShape() const;

  bool operator==(const CellParams&) const = default;
};

// A named, row-major view of one parameter block.
struct ParamBlock {
  std::string name;
  int rows;
  int cols;
  std::span<double> values;
};

struct ConstParamBlock {
  std::string name;
  int rows;
  int cols;
  std::span<const double> values;
};

// Parameters and their gradients share one shape; the tag keeps them from
// being mixed up.
template <typename Tag>
struct BiLstmTensors {
  int hidden_size = 0;
  CellParams forward;
  CellParams backward;
  std::vector<double> head_weights;  // 2H: forward half, then backward half
  double head_bias = 0.0;

  static BiLstmTensors Zeros(int hidden_size) {
    BiLstmTensors t;
    t.hidden_size = hidden_size;
    t.forward = CellParams::Zeros(hidden_size);
    t.backward = CellParams::Zeros(hidden_size);
    t.head_weights.assign(2 * static_cast<std::size_t>(hidden_size), 0.0);
    return t;
  }

  std::vector<ParamBlock> Blocks() {
    const int h4 = kNumGates * hidden_size;
    return {
        {"forward.input_weights", h4, kInputSize, forward.input_weights},
        {"forward.recurrent_weights", h4, hidden_size,
         forward.recurrent_weights},
        {"forward.bias", 1, h4, forward.bias},
        {"backward.input_weights", h4, kInputSize, backward.input_weights},
        {"backward.recurrent_weights", h4, hidden_size,
         backward.recurrent_weights},
        {"backward.bias", 1, h4, backward.bias},
        {"head.weights", 1, 2 * hidden_size, head_weights},
        {"head.bias", 1, 1, std::span<double>(&head_bias, 1)},
    };
  }

  std::vector<ConstParamBlock> Blocks() const {
    std::vector<ConstParamBlock> out;
    for (const ParamBlock& b : const_cast<BiLstmTensors*>(this)->Blocks()) {
      out.push_back({b.name, b.rows, b.cols, b.values});
    }
    return out;
  }

  std::size_t Count() const {
    std::size_t n = 0;
    for (const auto& b : Blocks()) n += b.values.size();
    return n;
  }

  void CheckShape() const;

  bool operator==(const BiLstmTensors&) const = default;
};

template <typename Tag>
void BiLstmTensors<Tag>::CheckShape() const {
  forward.CheckShape();
  backward.CheckShape();
  if (forward.hidden_size != hidden_size ||
      backward.hidden_size != hidden_size ||
      head_weights.size() != 2 * static_cast<std::size_t>(hidden_size)) {
    throw ShapeError("parameter blocks disagree with hidden size " +
                     std::to_string(hidden_size));
  }
}

struct ParamsTag {};
struct GradientsTag {};
using ModelParams = BiLstmTensors<ParamsTag>;
using Gradients = BiLstmTensors<GradientsTag>;

// Weights uniform in [-1/sqrt(H), 1/sqrt(H)], biases zero except the forget
// gate bias, which starts at +1.
ModelParams InitParams(int hidden_size, std::uint64_t seed);

struct CellState {
  std::vector<double> h;
  std::vector<double> c;
};

CellState CellStep(std::span<const double> x, std::span<const double> h_prev,
                   std::span<const double> c_prev, const CellParams& p);

// Activations of one direction, in processing order. Row 0 of `hidden` and
// `cell` is the zero initial state.
struct DirectionTrace {
  std::vector<double> gates;      // T x 4H, post-activation
  std::vector<double> cell;       // (T + 1) x H
  std::vector<double> hidden;     // (T + 1) x H
  std::vector<double> cell_tanh;  // T x H
};

struct ForwardCache {
  int hidden_size = 0;
  std::uint64_t params_fingerprint = 0;
  std::array<double, kTensorSize> input{};
  DirectionTrace forward;
  DirectionTrace backward;
  double logit = 0.0;
  double score = 0.0;
};

struct ForwardResult {
  double score = 0.0;
  ForwardCache cache;
};

ForwardResult Forward(const SampleTensor& tensor, const ModelParams& p);

// Score only; same arithmetic as Forward.
double Predict(const SampleTensor& tensor, const ModelParams& p);

// Sum over examples of w_y * (score - label)^2, accumulated in index order.
double WeightedMse(std::span<const double> scores, std::span<const int> labels,
                   double w_pos, double w_neg);

struct BackwardResult {
  double loss = 0.0;
  Gradients grads;
};

// Loss and exact gradient for one example. Throws ContractError if `cache`
// was not produced by Forward on this tensor and these parameters.
BackwardResult Backward(const SampleTensor& tensor, int label,
                        const ModelParams& p, double w_pos, double w_neg,
                        const ForwardCache& cache);

// As Backward, but adds `scale` times the gradient into `accumulator` and
// returns the unscaled loss.
double BackwardAccumulate(const SampleTensor& tensor, int label,
                          const ModelParams& p, double w_pos, double w_neg,
                          const ForwardCache& cache, double scale,
                          Gradients& accumulator);

// FNV-1a over the bit patterns of every parameter.
std::uint64_t Fingerprint(const ModelParams& p);

// Checkpoint: header line, then u32 hidden_size, u32 block count and, per
// block, u32 name length, name, u32 rows, u32 cols and rows*cols f64, all
// little-endian.
void WriteCheckpoint(const ModelParams& p, const std::filesystem::path& path);
ModelParams ReadCheckpoint(const std::filesystem::path& path);

}  // namespace hemocult

#endif  // HEMOCULT_LSTM_H_
