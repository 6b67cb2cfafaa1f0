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

// Synthetic ICU cohorts and the line-delimited cohort file format.
//
// A generated admission records the nine monitored variables at fixed
// per-variable cadences. Each value is a constant physiological mean plus a
// circadian sinusoid plus Gaussian noise. Positive admissions additionally
// drift (temperature, heart rate and CRP up, thrombocytes down) over the 24 h
// preceding the first positive culture, scaled by `signal_strength`. A
// fraction `outlier_rate` of the values of bio-limited variables is replaced
// by implausible values outside the limits.
//
// Cohort file (UTF-8, one record per line, TAB separated):
//
//   #hemocult-cohort v1
//   L  <admission_id>  <label>  <first_positive_time | ->
//   M  <admission_id>  <variable>  <timestamp_seconds>  <value>
//
// Numbers are written as the shortest decimal that round-trips.

#ifndef HEMOCULT_COHORT_H_
#define HEMOCULT_COHORT_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace hemocult {

inline constexpr char kCohortHeader[] = "#hemocult-cohort v1";

struct Measurement {
  double time = 0.0;  // seconds since admission
  double value = 0.0;  // physical units

  bool operator==(const Measurement&) const = default;
};

using Channel = std::vector<Measurement>;

struct PatientSeries {
  std::string admission_id;
  int label = 0;
  // Seconds since admission; present iff label == 1.
  std::optional<double> first_positive_time;
  // Variable name -> chronologically ordered measurements. Variables without
  // any measurement may be absent.
  std::map<std::string, Channel> channels;

  bool operator==(const PatientSeries&) const = default;

  // Throws ConfigError if timestamps are not strictly increasing or the
  // label/first_positive_time pairing is broken.
  void Validate() const;
};

struct CohortConfig {
  std::size_t n_admissions = 2177;
  std::size_t n_positive = 229;
  std::uint64_t seed = 0;
  // Samples per hour, keyed by variable name. Must cover all nine variables.
  std::map<std::string, double> frequency_per_hour = DefaultFrequencies();
  double outlier_rate = 0.00276;
  double signal_strength = 1.0;
  double min_horizon_hours = 12.0;
  double max_horizon_hours = 120.0;

  // Vitals every 5 min, labs every 12 h, SOFA daily.
  static std::map<std::string, double> DefaultFrequencies();

  // Throws ConfigError on inconsistent counts, rates or frequencies.
  void Validate() const;
};

// Pure function of `config`: the same config always yields the same cohort.
// Exactly `n_positive` of the returned admissions carry label 1.
std::vector<PatientSeries> GenerateCohort(const CohortConfig& config);

void WriteCohort(std::span<const PatientSeries> cohort,
                 const std::filesystem::path& path);
std::vector<PatientSeries> ReadCohort(const std::filesystem::path& path);

}  // namespace hemocult

#endif  // HEMOCULT_COHORT_H_
