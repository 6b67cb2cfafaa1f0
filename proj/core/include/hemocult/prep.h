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

// Turns irregular admissions into fixed 72 x 9 tensors.
//
// The pipeline per admission is: drop values outside the bio-limits, pick
// the window end (first positive culture, else the last measurement), cut
// the 72 h before it into one-hour bins, aggregate each bin with the
// variable's min/max/mean rule, normalize with
//
//   n = (x - avg) / (3 * std)
//
// using statistics fitted on the training partition only, forward-fill empty
// bins after the first observation and zero-pad before it.

#ifndef HEMOCULT_PREP_H_
#define HEMOCULT_PREP_H_

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "hemocult/cohort.h"
#include "hemocult/variables.h"

namespace hemocult {

inline constexpr int kNumBins = 72;
inline constexpr double kBinSeconds = 3600.0;
inline constexpr double kWindowSeconds = kNumBins * kBinSeconds;
inline constexpr int kTensorSize = kNumBins * kNumVariables;
inline constexpr char kTensorHeader[] = "#hemocult-tensors v1";

struct FilterResult {
  PatientSeries series;
  std::size_t removed_count = 0;
};

// Removes values of bio-limited variables that fall outside their closed
// interval. Throws SchemaError on an unknown variable name.
FilterResult FilterOutliers(const PatientSeries& series,
                            std::span<const VariableSpec> specs);

struct NormEntry {
  double avg = 0.0;
  double std = 0.0;  // population standard deviation

  bool operator==(const NormEntry&) const = default;
};

// Per-variable statistics, indexed by column_index.
struct NormStats {
  std::array<NormEntry, kNumVariables> entries{};

  const NormEntry& operator[](int column) const { return entries[column]; }
  bool operator==(const NormStats&) const = default;
};

// Mean and population standard deviation of every surviving raw value of
// each variable across all given admissions. Expects filtered input. Throws
// FitError if any variable has no values at all.
NormStats FitNormalizer(std::span<const PatientSeries> training_series,
                        std::span<const VariableSpec> specs);

// (x - avg) / (3 std), or 0 when std == 0.
double Normalize(double x, const NormEntry& stats);

// Seconds since admission at which the 72 h window closes.
double SelectEndTime(const PatientSeries& series);

using ResampledChannel = std::array<double, kNumBins>;

// Start (inclusive) of bin k of the window ending at `end_time`. Bin k spans
// [BinStart(k), BinStart(k + 1)), except bin 71 which also contains
// end_time itself.
double BinStart(double end_time, int k);

ResampledChannel ResampleChannel(std::span<const Measurement> channel,
                                 const VariableSpec& spec, double end_time,
                                 const NormEntry& stats);

struct SampleTensor {
  std::string admission_id;
  int label = 0;
  // Row-major: row = hour (oldest first), column = variable.
  std::array<double, kTensorSize> values{};

  double at(int t, int column) const {
    return values[t * kNumVariables + column];
  }
  double& at(int t, int column) { return values[t * kNumVariables + column]; }

  bool operator==(const SampleTensor&) const = default;
};

SampleTensor BuildTensor(const PatientSeries& series,
                         std::span<const VariableSpec> specs,
                         const NormStats& stats);

// Binary tensor cache. After the header line, each record is:
//   u32 id length, id bytes, u32 label, 648 f64 (all little-endian).
void WriteTensors(std::span<const SampleTensor> tensors,
                  const std::filesystem::path& path);
std::vector<SampleTensor> ReadTensors(const std::filesystem::path& path);

void WriteNormStats(const NormStats& stats, std::span<const VariableSpec> specs,
                    const std::filesystem::path& path);
NormStats ReadNormStats(std::span<const VariableSpec> specs,
                        const std::filesystem::path& path);

}  // namespace hemocult

#endif  // HEMOCULT_PREP_H_
