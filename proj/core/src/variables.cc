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

#include "hemocult/variables.h"

#include <array>
#include <set>

#include "hemocult/errors.h"

namespace hemocult {

std::string_view AggregationName(Aggregation aggregation) {
  switch (aggregation) {
    case Aggregation::kMin:
      return "min";
    case Aggregation::kMax:
      return "max";
    case Aggregation::kMean:
      return "mean";
  }
  return "unknown";
}

const std::vector<VariableSpec>& DefaultVariableSpecs() {
  static const std::vector<VariableSpec> specs = {
      {"temperature", BioLimits{29.0, 43.0}, Aggregation::kMax, 0},
      {"thrombocytes", std::nullopt, Aggregation::kMin, 1},
      {"leukocytes", std::nullopt, Aggregation::kMean, 2},
      {"crp", std::nullopt, Aggregation::kMax, 3},
      {"sofa", std::nullopt, Aggregation::kMax, 4},
      {"heart_rate", BioLimits{30.0, 250.0}, Aggregation::kMax, 5},
      {"resp_rate", BioLimits{0.0, 100.0}, Aggregation::kMax, 6},
      {"inr", std::nullopt, Aggregation::kMax, 7},
      {"mean_sap", BioLimits{30.0, 170.0}, Aggregation::kMax, 8},
  };
  return specs;
}

void ValidateSpecs(std::span<const VariableSpec> specs) {
  if (specs.size() != kNumVariables) {
    throw ConfigError("expected 9 variable specs, got " +
                      std::to_string(specs.size()));
  }
  std::set<std::string> names;
  std::array<bool, kNumVariables> seen{};
  for (const VariableSpec& spec : specs) {
    if (!names.insert(spec.name).second) {
      throw ConfigError("duplicate variable name: " + spec.name);
    }
    if (spec.column_index < 0 || spec.column_index >= kNumVariables ||
        seen[spec.column_index]) {
      throw ConfigError("column indices must be a permutation of 0..8");
    }
    seen[spec.column_index] = true;
    if (spec.bio_limits && !(spec.bio_limits->lo <= spec.bio_limits->hi)) {
      throw ConfigError("empty bio-limit interval for " + spec.name);
    }
  }
}

const VariableSpec* FindVariable(std::span<const VariableSpec> specs,
                                 std::string_view name) {
  for (const VariableSpec& spec : specs) {
    if (spec.name == name) return &spec;
  }
  return nullptr;
}

}  // namespace hemocult
