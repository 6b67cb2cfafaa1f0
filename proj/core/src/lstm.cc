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

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

#include "hemocult/errors.h"
#include "hemocult/io.h"

namespace hemocult {
namespace {

double Sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// One cell step on raw buffers. `gates_out` receives the four activations
// (i, f, g, o), each H long.
void StepInto(const double* x, const double* h_prev, const double* c_prev,
              const CellParams& p, double* gates_out, double* c_out,
              double* c_tanh_out, double* h_out) {
  const int hidden = p.hidden_size;
  const int rows = kNumGates * hidden;
  for (int r = 0; r < rows; ++r) {
    double a = p.bias[r];
    const double* w = &p.input_weights[static_cast<std::size_t>(r) * kInputSize];
    for (int j = 0; j < kInputSize; ++j) a += w[j] * x[j];
    const double* u = &p.recurrent_weights[static_cast<std::size_t>(r) * hidden];
    for (int k = 0; k < hidden; ++k) a += u[k] * h_prev[k];
    gates_out[r] = (r / hidden == kGateCell) ? std::tanh(a) : Sigmoid(a);
  }
  const double* i = gates_out + kGateInput * hidden;
  const double* f = gates_out + kGateForget * hidden;
  const double* g = gates_out + kGateCell * hidden;
  const double* o = gates_out + kGateOutput * hidden;
  for (int k = 0; k < hidden; ++k) {
    c_out[k] = f[k] * c_prev[k] + i[k] * g[k];
    c_tanh_out[k] = std::tanh(c_out[k]);
    h_out[k] = o[k] * c_tanh_out[k];
  }
}

// Input row consumed at processing step `step` of a direction.
const double* InputAt(const std::array<double, kTensorSize>& input, int step,
                      bool reversed) {
  const int t = reversed ? kSequenceLength - 1 - step : step;
  return &input[static_cast<std::size_t>(t) * kInputSize];
}

void RunDirection(const std::array<double, kTensorSize>& input,
                  const CellParams& p, bool reversed, DirectionTrace& trace) {
  const std::size_t hidden = p.hidden_size;
  const std::size_t steps = kSequenceLength;
  trace.gates.assign(steps * kNumGates * hidden, 0.0);
  trace.cell.assign((steps + 1) * hidden, 0.0);
  trace.hidden.assign((steps + 1) * hidden, 0.0);
  trace.cell_tanh.assign(steps * hidden, 0.0);
  for (std::size_t s = 0; s < steps; ++s) {
    StepInto(InputAt(input, static_cast<int>(s), reversed),
             &trace.hidden[s * hidden], &trace.cell[s * hidden], p,
             &trace.gates[s * kNumGates * hidden],
             &trace.cell[(s + 1) * hidden], &trace.cell_tanh[s * hidden],
             &trace.hidden[(s + 1) * hidden]);
  }
}

double Dot(const double* a, const double* b, int n) {
  double sum = 0.0;
  for (int k = 0; k < n; ++k) sum += a[k] * b[k];
  return sum;
}

const double* FinalHidden(const DirectionTrace& trace, int hidden) {
  return &trace.hidden[static_cast<std::size_t>(kSequenceLength) * hidden];
}

// Backpropagates `dh_final` through one direction, adding into `grads`.
void BackpropDirection(const std::array<double, kTensorSize>& input,
                       const CellParams& p, bool reversed,
                       const DirectionTrace& trace,
                       std::vector<double> dh, CellParams& grads) {
  const int hidden = p.hidden_size;
  const int rows = kNumGates * hidden;
  std::vector<double> dc_carry(hidden, 0.0);
  std::vector<double> da(rows, 0.0);
  std::vector<double> dh_prev(hidden, 0.0);
  for (int s = kSequenceLength - 1; s >= 0; --s) {
    const std::size_t su = static_cast<std::size_t>(s);
    const double* gates = &trace.gates[su * rows];
    const double* c_prev = &trace.cell[su * hidden];
    const double* h_prev = &trace.hidden[su * hidden];
    const double* c_tanh = &trace.cell_tanh[su * hidden];
    for (int k = 0; k < hidden; ++k) {
      const double i = gates[kGateInput * hidden + k];
      const double f = gates[kGateForget * hidden + k];
      const double g = gates[kGateCell * hidden + k];
      const double o = gates[kGateOutput * hidden + k];
      const double tc = c_tanh[k];
      const double dc = dc_carry[k] + dh[k] * o * (1.0 - tc * tc);
      da[kGateInput * hidden + k] = dc * g * i * (1.0 - i);
      da[kGateForget * hidden + k] = dc * c_prev[k] * f * (1.0 - f);
      da[kGateCell * hidden + k] = dc * i * (1.0 - g * g);
      da[kGateOutput * hidden + k] = dh[k] * tc * o * (1.0 - o);
      dc_carry[k] = dc * f;
    }
    const double* x = InputAt(input, s, reversed);
    std::fill(dh_prev.begin(), dh_prev.end(), 0.0);
    for (int r = 0; r < rows; ++r) {
      const double d = da[r];
      grads.bias[r] += d;
      double* gw = &grads.input_weights[static_cast<std::size_t>(r) * kInputSize];
      for (int j = 0; j < kInputSize; ++j) gw[j] += d * x[j];
      double* gu =
          &grads.recurrent_weights[static_cast<std::size_t>(r) * hidden];
      const double* u = &p.recurrent_weights[static_cast<std::size_t>(r) * hidden];
      for (int k = 0; k < hidden; ++k) {
        gu[k] += d * h_prev[k];
        dh_prev[k] += u[k] * d;
      }
    }
    dh.swap(dh_prev);
  }
}

void CheckCache(const SampleTensor& tensor, const ModelParams& p,
                const ForwardCache& cache) {
  // Compare bytes rather than values so that NaN inputs still match.
  if (cache.hidden_size != p.hidden_size ||
      std::memcmp(cache.input.data(), tensor.values.data(),
                  sizeof(double) * kTensorSize) != 0 ||
      cache.params_fingerprint != Fingerprint(p)) {
    throw ContractError("forward cache does not match tensor and parameters");
  }
}

}  // namespace

CellParams CellParams::Zeros(int hidden_size) {
  if (hidden_size < 1) throw ShapeError("hidden size must be >= 1");
  const std::size_t h = hidden_size;
  CellParams p;
  p.hidden_size = hidden_size;
  p.input_weights.assign(kNumGates * h * kInputSize, 0.0);
  p.recurrent_weights.assign(kNumGates * h * h, 0.0);
  p.bias.assign(kNumGates * h, 0.0);
  return p;
}

void CellParams::CheckShape() const {
  const std::size_t h = hidden_size;
  if (hidden_size < 1 || input_weights.size() != kNumGates * h * kInputSize ||
      recurrent_weights.size() != kNumGates * h * h ||
      bias.size() != kNumGates * h) {
    throw ShapeError("cell parameters inconsistent with hidden size " +
                     std::to_string(hidden_size));
  }
}

ModelParams InitParams(int hidden_size, std::uint64_t seed) {
  ModelParams p = ModelParams::Zeros(hidden_size);
  std::mt19937_64 engine(seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden_size));
  std::uniform_real_distribution<double> uniform(-bound, bound);
  for (CellParams* cell : {&p.forward, &p.backward}) {
    for (double& w : cell->input_weights) w = uniform(engine);
    for (double& w : cell->recurrent_weights) w = uniform(engine);
    for (int k = 0; k < hidden_size; ++k) {
      cell->bias[kGateForget * hidden_size + k] = 1.0;
    }
  }
  for (double& w : p.head_weights) w = uniform(engine);
  return p;
}

CellState CellStep(std::span<const double> x, std::span<const double> h_prev,
                   std::span<const double> c_prev, const CellParams& p) {
  p.CheckShape();
  const std::size_t h = p.hidden_size;
  if (x.size() != kInputSize || h_prev.size() != h || c_prev.size() != h) {
    throw ShapeError("cell step inputs do not match hidden size");
  }
  std::vector<double> gates(kNumGates * h);
  std::vector<double> c_tanh(h);
  CellState out{std::vector<double>(h), std::vector<double>(h)};
  StepInto(x.data(), h_prev.data(), c_prev.data(), p, gates.data(),
           out.c.data(), c_tanh.data(), out.h.data());
  return out;
}

ForwardResult Forward(const SampleTensor& tensor, const ModelParams& p) {
  p.CheckShape();
  ForwardResult result;
  ForwardCache& cache = result.cache;
  const int hidden = p.hidden_size;
  cache.hidden_size = hidden;
  cache.params_fingerprint = Fingerprint(p);
  cache.input = tensor.values;
  RunDirection(cache.input, p.forward, /*reversed=*/false, cache.forward);
  RunDirection(cache.input, p.backward, /*reversed=*/true, cache.backward);
  // Two partial dots summed once, so swapping the directions (and the halves
  // of the head) reproduces the logit bit for bit.
  const double from_forward =
      Dot(p.head_weights.data(), FinalHidden(cache.forward, hidden), hidden);
  const double from_backward = Dot(p.head_weights.data() + hidden,
                                   FinalHidden(cache.backward, hidden), hidden);
  cache.logit = (from_forward + from_backward) + p.head_bias;
  cache.score = Sigmoid(cache.logit);
  result.score = cache.score;
  return result;
}

double Predict(const SampleTensor& tensor, const ModelParams& p) {
  return Forward(tensor, p).score;
}

double WeightedMse(std::span<const double> scores, std::span<const int> labels,
                   double w_pos, double w_neg) {
  if (scores.size() != labels.size()) {
    throw ShapeError("scores and labels differ in length");
  }
  double loss = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double residual = scores[i] - labels[i];
    loss += (labels[i] == 1 ? w_pos : w_neg) * residual * residual;
  }
  return loss;
}

double BackwardAccumulate(const SampleTensor& tensor, int label,
                          const ModelParams& p, double w_pos, double w_neg,
                          const ForwardCache& cache, double scale,
                          Gradients& accumulator) {
  CheckCache(tensor, p, cache);
  if (accumulator.hidden_size != p.hidden_size) {
    throw ShapeError("gradient accumulator has the wrong hidden size");
  }
  const int hidden = p.hidden_size;
  const double weight = label == 1 ? w_pos : w_neg;
  const double residual = cache.score - label;
  const double loss = weight * residual * residual;

  // d loss / d logit, pre-scaled so every downstream term is scaled too.
  const double dz =
      scale * 2.0 * weight * residual * cache.score * (1.0 - cache.score);
  const double* h_fwd = FinalHidden(cache.forward, hidden);
  const double* h_bwd = FinalHidden(cache.backward, hidden);
  accumulator.head_bias += dz;
  std::vector<double> dh_fwd(hidden);
  std::vector<double> dh_bwd(hidden);
  for (int k = 0; k < hidden; ++k) {
    accumulator.head_weights[k] += dz * h_fwd[k];
    accumulator.head_weights[hidden + k] += dz * h_bwd[k];
    dh_fwd[k] = dz * p.head_weights[k];
    dh_bwd[k] = dz * p.head_weights[hidden + k];
  }
  BackpropDirection(cache.input, p.forward, /*reversed=*/false, cache.forward,
                    std::move(dh_fwd), accumulator.forward);
  BackpropDirection(cache.input, p.backward, /*reversed=*/true, cache.backward,
                    std::move(dh_bwd), accumulator.backward);
  return loss;
}

BackwardResult Backward(const SampleTensor& tensor, int label,
                        const ModelParams& p, double w_pos, double w_neg,
                        const ForwardCache& cache) {
  BackwardResult result;
  result.grads = Gradients::Zeros(p.hidden_size);
  result.loss = BackwardAccumulate(tensor, label, p, w_pos, w_neg, cache,
                                   /*scale=*/1.0, result.grads);
  return result;
}

std::uint64_t Fingerprint(const ModelParams& p) {
  std::uint64_t hash = 0xcbf29ce484222325ull;
  const auto mix = [&hash](double v) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
    for (int b = 0; b < 8; ++b) {
      hash ^= bits & 0xffu;
      hash *= 0x100000001b3ull;
      bits >>= 8;
    }
  };
  mix(static_cast<double>(p.hidden_size));
  for (const ConstParamBlock& block : p.Blocks()) {
    for (double v : block.values) mix(v);
  }
  return hash;
}

void WriteCheckpoint(const ModelParams& p, const std::filesystem::path& path) {
  p.CheckShape();
  std::ofstream out = io::OpenForWrite(path, /*binary=*/true);
  out << kCheckpointHeader << '\n';
  const auto blocks = p.Blocks();
  io::WriteU32(out, static_cast<std::uint32_t>(p.hidden_size));
  io::WriteU32(out, static_cast<std::uint32_t>(blocks.size()));
  for (const ConstParamBlock& block : blocks) {
    io::WriteU32(out, static_cast<std::uint32_t>(block.name.size()));
    out.write(block.name.data(), static_cast<std::streamsize>(block.name.size()));
    io::WriteU32(out, static_cast<std::uint32_t>(block.rows));
    io::WriteU32(out, static_cast<std::uint32_t>(block.cols));
    io::WriteF64s(out, block.values);
  }
  out.flush();
  if (!out) throw IoError("write failed: " + path.string());
}

ModelParams ReadCheckpoint(const std::filesystem::path& path) {
  std::ifstream in = io::OpenForRead(path, /*binary=*/true);
  std::string header;
  if (!std::getline(in, header) || header != kCheckpointHeader) {
    throw IoError("missing checkpoint header in " + path.string());
  }
  const std::uint32_t hidden = io::ReadU32(in);
  if (hidden < 1 || hidden > 100000) throw IoError("implausible hidden size");
  ModelParams p = ModelParams::Zeros(static_cast<int>(hidden));
  const std::uint32_t count = io::ReadU32(in);
  auto blocks = p.Blocks();
  if (count != blocks.size()) throw IoError("unexpected block count");
  for (ParamBlock& block : blocks) {
    const std::uint32_t name_length = io::ReadU32(in);
    std::string name(name_length, '\0');
    in.read(name.data(), name_length);
    const std::uint32_t rows = io::ReadU32(in);
    const std::uint32_t cols = io::ReadU32(in);
    if (!in || name != block.name || static_cast<int>(rows) != block.rows ||
        static_cast<int>(cols) != block.cols) {
      throw ShapeError("checkpoint block '" + name + "' does not match " +
                       block.name);
    }
    io::ReadF64s(in, block.values);
  }
  return p;
}

}  // namespace hemocult
