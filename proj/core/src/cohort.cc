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

#include "hemocult/cohort.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <string_view>
#include <unordered_map>

#include "hemocult/errors.h"
#include "hemocult/io.h"
#include "hemocult/variables.h"

namespace hemocult {
namespace {

constexpr double kSecondsPerHour = 3600.0;
constexpr double kSecondsPerDay = 86400.0;

// Per-variable generative parameters, in physical units.
struct Physiology {
  double mean;
  double circadian_amplitude;
  double noise_sd;
  // Shift reached at the first positive culture when signal_strength == 1.
  double drift;
  double floor;      // values are clamped from below (unlimited variables)
  double ceiling;    // and from above
  double resolution;  // reporting granularity
};

Physiology PhysiologyFor(std::string_view name) {
  if (name == "temperature") return {37.0, 0.3, 0.3, 1.5, 29.0, 43.0, 0.01};
  if (name == "thrombocytes") return {220.0, 0.0, 45.0, -90.0, 5.0, 1000.0, 1.0};
  if (name == "leukocytes") return {10.0, 0.0, 3.0, 0.0, 0.1, 100.0, 0.01};
  if (name == "crp") return {40.0, 0.0, 25.0, 90.0, 0.0, 600.0, 0.1};
  if (name == "sofa") return {6.0, 0.0, 2.0, 0.0, 0.0, 24.0, 1.0};
  if (name == "heart_rate") return {88.0, 5.0, 8.0, 25.0, 30.0, 250.0, 1.0};
  if (name == "resp_rate") return {18.0, 2.0, 3.0, 0.0, 0.0, 100.0, 1.0};
  if (name == "inr") return {1.2, 0.0, 0.15, 0.0, 0.5, 10.0, 0.01};
  if (name == "mean_sap") return {80.0, 4.0, 9.0, 0.0, 30.0, 170.0, 1.0};
  throw SchemaError("no physiology for variable " + std::string(name));
}

double Quantize(double value, double resolution) {
  // Divide by an integral scale so 37.12 prints as "37.12".
  const double scale = std::round(1.0 / resolution);
  return std::round(value * scale) / scale;
}

std::string AdmissionId(std::size_t index) {
  std::string digits = std::to_string(index);
  if (digits.size() < 5) digits.insert(0, 5 - digits.size(), '0');
  return "adm" + digits;
}

std::mt19937_64 PatientEngine(std::uint64_t seed, std::size_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(std::uint64_t{index} >> 32),
                    0x636f686fu};
  return std::mt19937_64(seq);
}

Channel GenerateChannel(const VariableSpec& spec, double frequency,
                        double record_end, int label,
                        double first_positive_time,
                        const CohortConfig& config, std::mt19937_64& engine) {
  const Physiology phys = PhysiologyFor(spec.name);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  const double period = kSecondsPerHour / frequency;
  const double phase = unit(engine) * period;
  const double circadian_phase = unit(engine) * 2.0 * std::numbers::pi;
  const double drift_start = first_positive_time - kSecondsPerDay;

  Channel channel;
  double last_time = -1.0;
  for (std::size_t k = 0;; ++k) {
    const double time = std::round(phase + static_cast<double>(k) * period);
    if (time > record_end) break;
    if (time <= last_time) continue;
    last_time = time;

    double value =
        phys.mean +
        phys.circadian_amplitude *
            std::sin(2.0 * std::numbers::pi * time / kSecondsPerDay +
                     circadian_phase) +
        phys.noise_sd * gauss(engine);
    if (label == 1 && phys.drift != 0.0) {
      const double ramp =
          std::clamp((time - drift_start) / kSecondsPerDay, 0.0, 1.0);
      value += config.signal_strength * phys.drift * ramp;
    }
    double lo = phys.floor;
    double hi = phys.ceiling;
    if (spec.bio_limits) {
      lo = std::max(lo, spec.bio_limits->lo);
      hi = std::min(hi, spec.bio_limits->hi);
    }
    value = std::clamp(Quantize(value, phys.resolution), lo, hi);

    if (spec.bio_limits && config.outlier_rate > 0.0 &&
        unit(engine) < config.outlier_rate) {
      const BioLimits& limits = *spec.bio_limits;
      const double excess = 0.5 * limits.Width() * (1.0 - unit(engine));
      const bool above = unit(engine) < 0.5;
      value = Quantize(above ? limits.hi + excess : limits.lo - excess, 0.01);
      if (limits.Contains(value)) {
        value = above ? limits.hi + 0.01 : limits.lo - 0.01;
      }
    }
    channel.push_back({time, value});
  }
  return channel;
}

PatientSeries GeneratePatient(std::size_t index, int label,
                              const CohortConfig& config) {
  std::mt19937_64 engine = PatientEngine(config.seed, index);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  PatientSeries series;
  series.admission_id = AdmissionId(index);
  series.label = label;

  const double horizon_hours =
      config.min_horizon_hours +
      unit(engine) * (config.max_horizon_hours - config.min_horizon_hours);
  const double horizon = std::round(horizon_hours * kSecondsPerHour);
  double record_end = horizon;
  double first_positive_time = 0.0;
  if (label == 1) {
    // Monitoring continues for up to 12 h after the culture is drawn.
    first_positive_time = horizon;
    series.first_positive_time = first_positive_time;
    record_end = horizon + std::round(unit(engine) * 12.0 * kSecondsPerHour);
  }

  for (const VariableSpec& spec : DefaultVariableSpecs()) {
    const double frequency = config.frequency_per_hour.at(spec.name);
    Channel channel = GenerateChannel(spec, frequency, record_end, label,
                                      first_positive_time, config, engine);
    if (!channel.empty()) series.channels.emplace(spec.name, std::move(channel));
  }
  return series;
}

}  // namespace

void PatientSeries::Validate() const {
  if (label != 0 && label != 1) {
    throw ConfigError(admission_id + ": label must be 0 or 1");
  }
  if (first_positive_time.has_value() != (label == 1)) {
    throw ConfigError(admission_id +
                      ": first_positive_time must be present iff label is 1");
  }
  for (const auto& [name, channel] : channels) {
    for (std::size_t i = 1; i < channel.size(); ++i) {
      if (!(channel[i].time > channel[i - 1].time)) {
        throw ConfigError(admission_id + "/" + name +
                          ": timestamps not strictly increasing");
      }
    }
  }
}

std::map<std::string, double> CohortConfig::DefaultFrequencies() {
  return {
      {"temperature", 12.0},      {"heart_rate", 12.0},
      {"resp_rate", 12.0},        {"mean_sap", 12.0},
      {"thrombocytes", 1.0 / 12}, {"leukocytes", 1.0 / 12},
      {"crp", 1.0 / 12},          {"inr", 1.0 / 12},
      {"sofa", 1.0 / 24},
  };
}

void CohortConfig::Validate() const {
  if (n_positive > n_admissions) {
    throw ConfigError("n_positive exceeds n_admissions");
  }
  if (!(outlier_rate >= 0.0 && outlier_rate < 1.0)) {
    throw ConfigError("outlier_rate must lie in [0, 1)");
  }
  if (!std::isfinite(signal_strength) || signal_strength < 0.0) {
    throw ConfigError("signal_strength must be finite and non-negative");
  }
  if (!(min_horizon_hours > 0.0) || !(max_horizon_hours >= min_horizon_hours) ||
      !std::isfinite(max_horizon_hours)) {
    throw ConfigError("horizon range must satisfy 0 < min <= max");
  }
  for (const VariableSpec& spec : DefaultVariableSpecs()) {
    const auto it = frequency_per_hour.find(spec.name);
    if (it == frequency_per_hour.end()) {
      throw ConfigError("missing frequency for " + spec.name);
    }
    if (!(it->second > 0.0) || !std::isfinite(it->second)) {
      throw ConfigError("frequency for " + spec.name + " must be > 0");
    }
  }
  for (const auto& [name, frequency] : frequency_per_hour) {
    if (FindVariable(DefaultVariableSpecs(), name) == nullptr) {
      throw ConfigError("frequency given for unknown variable " + name);
    }
  }
}

std::vector<PatientSeries> GenerateCohort(const CohortConfig& config) {
  config.Validate();

  std::vector<std::size_t> order(config.n_admissions);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 engine(config.seed);
  std::shuffle(order.begin(), order.end(), engine);
  std::vector<int> labels(config.n_admissions, 0);
  for (std::size_t i = 0; i < config.n_positive; ++i) labels[order[i]] = 1;

  std::vector<PatientSeries> cohort;
  cohort.reserve(config.n_admissions);
  for (std::size_t i = 0; i < config.n_admissions; ++i) {
    cohort.push_back(GeneratePatient(i, labels[i], config));
  }
  return cohort;
}

void WriteCohort(std::span<const PatientSeries> cohort,
                 const std::filesystem::path& path) {
  std::ofstream out = io::OpenForWrite(path);
  out << kCohortHeader << '\n';
  std::string line;
  for (const PatientSeries& series : cohort) {
    out << "L\t" << series.admission_id << '\t' << series.label << '\t'
        << (series.first_positive_time
                ? io::FormatDouble(*series.first_positive_time)
                : std::string("-"))
        << '\n';
    for (const auto& [name, channel] : series.channels) {
      for (const Measurement& m : channel) {
        line.clear();
        line += "M\t";
        line += series.admission_id;
        line += '\t';
        line += name;
        line += '\t';
        line += io::FormatDouble(m.time);
        line += '\t';
        line += io::FormatDouble(m.value);
        line += '\n';
        out << line;
      }
    }
  }
  out.flush();
  if (!out) throw IoError("write failed: " + path.string());
}

namespace {

std::vector<std::string_view> SplitTabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

}  // namespace

std::vector<PatientSeries> ReadCohort(const std::filesystem::path& path) {
  std::ifstream in = io::OpenForRead(path);
  std::string line;
  if (!std::getline(in, line) || line != kCohortHeader) {
    throw IoError("missing cohort header in " + path.string());
  }
  std::vector<PatientSeries> cohort;
  std::unordered_map<std::string, std::size_t> index_of;
  std::size_t line_number = 1;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    const auto fields = SplitTabs(line);
    const auto fail = [&](const std::string& why) {
      throw IoError(path.string() + ":" + std::to_string(line_number) + ": " +
                    why);
    };
    if (fields[0] == "L") {
      if (fields.size() != 4) fail("label record needs 4 fields");
      PatientSeries series;
      series.admission_id = std::string(fields[1]);
      const auto label = io::ParseInt(fields[2]);
      if (label != 0 && label != 1) fail("label must be 0 or 1");
      series.label = static_cast<int>(label);
      if (fields[3] != "-") series.first_positive_time = io::ParseDouble(fields[3]);
      if (!index_of.emplace(series.admission_id, cohort.size()).second) {
        fail("duplicate admission " + series.admission_id);
      }
      cohort.push_back(std::move(series));
    } else if (fields[0] == "M") {
      if (fields.size() != 5) fail("measurement record needs 5 fields");
      const auto it = index_of.find(std::string(fields[1]));
      if (it == index_of.end()) fail("measurement before its label record");
      Channel& channel = cohort[it->second].channels[std::string(fields[2])];
      const Measurement m{io::ParseDouble(fields[3]),
                          io::ParseDouble(fields[4])};
      if (!channel.empty() && !(m.time > channel.back().time)) {
        fail("timestamps not strictly increasing");
      }
      channel.push_back(m);
    } else {
      fail("unknown record type");
    }
  }
  for (const PatientSeries& series : cohort) {
    try {
      series.Validate();
    } catch (const ConfigError& e) {
      throw IoError(path.string() + ": " + e.what());
    }
  }
  return cohort;
}

}  // namespace hemocult
