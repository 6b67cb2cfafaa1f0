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

#ifndef HEMOCULT_VARIABLES_H_
#define HEMOCULT_VARIABLES_H_

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hemocult {

inline constexpr int kNumVariables = 9;

enum class Aggregation { kMin, kMax, kMean };

std::string_view AggregationName(Aggregation aggregation);

// Closed physiological plausibility interval. Values outside are treated as
// measurement or entry errors.
struct BioLimits {
  double lo = 0.0;
  double hi = 0.0;

  bool Contains(double value) const { return value >= lo && value <= hi; }
  double Width() const { return hi - lo; }
};

struct VariableSpec {
  std::string name;
  std::optional<BioLimits> bio_limits;
  Aggregation aggregation = Aggregation::kMax;
  int column_index = 0;
};

// The nine monitored variables, in tensor column order:
//   temperature, thrombocytes, leukocytes, crp, sofa, heart_rate, resp_rate,
//   inr, mean_sap.
const std::vector<VariableSpec>& DefaultVariableSpecs();

// Checks that `specs` has nine entries with unique names and a column_index
// permutation of 0..8. Throws ConfigError otherwise.
void ValidateSpecs(std::span<const VariableSpec> specs);

// Returns the spec with the given name, or nullptr.
const VariableSpec* FindVariable(std::span<const VariableSpec> specs,
                                 std::string_view name);

}  // namespace hemocult

#endif  // HEMOCULT_VARIABLES_H_
