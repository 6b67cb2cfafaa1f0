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

#include "hemocult/prep.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>

#include "hemocult/errors.h"
#include "hemocult/io.h"

namespace hemocult {
namespace {

const VariableSpec& RequireVariable(std::span<const VariableSpec> specs,
                                    const std::string& name,
                                    const std::string& admission_id) {
  const VariableSpec* spec = FindVariable(specs, name);
  if (spec == nullptr) {
    throw SchemaError(admission_id + ": unknown variable '" + name + "'");
  }
  return *spec;
}

// Bin containing `time`, or -1 outside [end - 72h, end].
int BinIndex(double time, double end_time) {
  if (time > end_time || time < BinStart(end_time, 0)) return -1;
  int k = static_cast<int>(std::floor((time - BinStart(end_time, 0)) /
                                      kBinSeconds));
  k = std::clamp(k, 0, kNumBins - 1);
  // The division can be off by one near boundaries; settle on the exact
  // boundary comparisons.
  while (k > 0 && time < BinStart(end_time, k)) --k;
  while (k < kNumBins - 1 && time >= BinStart(end_time, k + 1)) ++k;
  return k;
}

}  // namespace

FilterResult FilterOutliers(const PatientSeries& series,
                            std::span<const VariableSpec> specs) {
  FilterResult result;
  result.series.admission_id = series.admission_id;
  result.series.label = series.label;
  result.series.first_positive_time = series.first_positive_time;
  for (const auto& [name, channel] : series.channels) {
    const VariableSpec& spec = RequireVariable(specs, name, series.admission_id);
    Channel& kept = result.series.channels[name];
    if (!spec.bio_limits) {
      kept = channel;
      continue;
    }
    kept.reserve(channel.size());
    for (const Measurement& m : channel) {
      if (spec.bio_limits->Contains(m.value)) {
        kept.push_back(m);
      } else {
        ++result.removed_count;
      }
    }
  }
  return result;
}

NormStats FitNormalizer(std::span<const PatientSeries> training_series,
                        std::span<const VariableSpec> specs) {
  std::array<double, kNumVariables> sum{};
  std::array<std::size_t, kNumVariables> count{};
  for (const PatientSeries& series : training_series) {
    for (const auto& [name, channel] : series.channels) {
      const int column =
          RequireVariable(specs, name, series.admission_id).column_index;
      for (const Measurement& m : channel) sum[column] += m.value;
      count[column] += channel.size();
    }
  }
  NormStats stats;
  for (const VariableSpec& spec : specs) {
    const int column = spec.column_index;
    if (count[column] == 0) {
      throw FitError("no training values for variable " + spec.name);
    }
    stats.entries[column].avg = sum[column] / static_cast<double>(count[column]);
  }
  // Second pass on centered values.
  std::array<double, kNumVariables> squares{};
  for (const PatientSeries& series : training_series) {
    for (const auto& [name, channel] : series.channels) {
      const int column = FindVariable(specs, name)->column_index;
      const double avg = stats.entries[column].avg;
      for (const Measurement& m : channel) {
        const double d = m.value - avg;
        squares[column] += d * d;
      }
    }
  }
  for (int column = 0; column < kNumVariables; ++column) {
    stats.entries[column].std =
        std::sqrt(squares[column] / static_cast<double>(count[column]));
  }
  return stats;
}

double Normalize(double x, const NormEntry& stats) {
  if (stats.std == 0.0) return 0.0;
  return (x - stats.avg) / (3.0 * stats.std);
}

double SelectEndTime(const PatientSeries& series) {
  if (series.label == 1) {
    if (!series.first_positive_time) {
      throw ContractError(series.admission_id +
                          ": positive admission without culture time");
    }
    return *series.first_positive_time;
  }
  double end = -std::numeric_limits<double>::infinity();
  for (const auto& [name, channel] : series.channels) {
    if (!channel.empty()) end = std::max(end, channel.back().time);
  }
  if (std::isinf(end)) {
    throw EmptySeriesError(series.admission_id +
                           ": negative admission without measurements");
  }
  return end;
}

double BinStart(double end_time, int k) {
  return end_time - static_cast<double>(kNumBins - k) * kBinSeconds;
}

ResampledChannel ResampleChannel(std::span<const Measurement> channel,
                                 const VariableSpec& spec, double end_time,
                                 const NormEntry& stats) {
  std::array<double, kNumBins> acc{};
  std::array<std::size_t, kNumBins> count{};
  for (const Measurement& m : channel) {
    const int k = BinIndex(m.time, end_time);
    if (k < 0) continue;
    if (count[k] == 0) {
      acc[k] = m.value;
    } else {
      switch (spec.aggregation) {
        case Aggregation::kMin:
          acc[k] = std::min(acc[k], m.value);
          break;
        case Aggregation::kMax:
          acc[k] = std::max(acc[k], m.value);
          break;
        case Aggregation::kMean:
          acc[k] += m.value;
          break;
      }
    }
    ++count[k];
  }

  ResampledChannel out{};
  bool seen = false;
  double previous = 0.0;
  for (int k = 0; k < kNumBins; ++k) {
    if (count[k] > 0) {
      double aggregate = acc[k];
      if (spec.aggregation == Aggregation::kMean) {
        aggregate /= static_cast<double>(count[k]);
      }
      previous = Normalize(aggregate, stats);
      seen = true;
    }
    out[k] = seen ? previous : 0.0;
  }
  return out;
}

SampleTensor BuildTensor(const PatientSeries& series,
                         std::span<const VariableSpec> specs,
                         const NormStats& stats) {
  const double end_time = SelectEndTime(series);
  SampleTensor tensor;
  tensor.admission_id = series.admission_id;
  tensor.label = series.label;
  for (const auto& [name, channel] : series.channels) {
    const VariableSpec& spec = RequireVariable(specs, name, series.admission_id);
    const int column = spec.column_index;
    const ResampledChannel resampled =
        ResampleChannel(channel, spec, end_time, stats[column]);
    for (int t = 0; t < kNumBins; ++t) tensor.at(t, column) = resampled[t];
  }
  return tensor;
}

void WriteTensors(std::span<const SampleTensor> tensors,
                  const std::filesystem::path& path) {
  std::ofstream out = io::OpenForWrite(path, /*binary=*/true);
  out << kTensorHeader << '\n';
  for (const SampleTensor& tensor : tensors) {
    io::WriteU32(out, static_cast<std::uint32_t>(tensor.admission_id.size()));
    out.write(tensor.admission_id.data(),
              static_cast<std::streamsize>(tensor.admission_id.size()));
    io::WriteU32(out, static_cast<std::uint32_t>(tensor.label));
    io::WriteF64s(out, tensor.values);
  }
  out.flush();
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<SampleTensor> ReadTensors(const std::filesystem::path& path) {
  std::ifstream in = io::OpenForRead(path, /*binary=*/true);
  std::string header;
  if (!std::getline(in, header) || header != kTensorHeader) {
    throw IoError("missing tensor header in " + path.string());
  }
  std::vector<SampleTensor> tensors;
  while (in.peek() != std::char_traits<char>::eof()) {
    SampleTensor tensor;
    const std::uint32_t id_length = io::ReadU32(in);
    if (id_length > 4096) throw IoError("implausible id length");
    tensor.admission_id.resize(id_length);
    in.read(tensor.admission_id.data(), id_length);
    const std::uint32_t label = io::ReadU32(in);
    if (label > 1) throw IoError("label must be 0 or 1");
    tensor.label = static_cast<int>(label);
    io::ReadF64s(in, tensor.values);
    tensors.push_back(std::move(tensor));
  }
  return tensors;
}

void WriteNormStats(const NormStats& stats, std::span<const VariableSpec> specs,
                    const std::filesystem::path& path) {
  std::map<std::string, std::string> values;
  for (const VariableSpec& spec : specs) {
    values[spec.name + ".avg"] = io::FormatDouble(stats[spec.column_index].avg);
    values[spec.name + ".std"] = io::FormatDouble(stats[spec.column_index].std);
  }
  io::WriteKeyValues(path, values);
}

NormStats ReadNormStats(std::span<const VariableSpec> specs,
                        const std::filesystem::path& path) {
  const auto values = io::ReadKeyValues(path);
  NormStats stats;
  for (const VariableSpec& spec : specs) {
    const auto avg = values.find(spec.name + ".avg");
    const auto sd = values.find(spec.name + ".std");
    if (avg == values.end() || sd == values.end()) {
      throw IoError("stats file lacks " + spec.name);
    }
    stats.entries[spec.column_index] = {io::ParseDouble(avg->second),
                                        io::ParseDouble(sd->second)};
  }
  return stats;
}

}  // namespace hemocult
