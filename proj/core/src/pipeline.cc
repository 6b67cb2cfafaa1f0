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

#include "hemocult/pipeline.h"

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>
#include <unordered_map>

#include "hemocult/errors.h"
#include "hemocult/io.h"
#include "hemocult/prep.h"

namespace hemocult {
namespace fs = std::filesystem;
namespace {

constexpr char kSplitFile[] = "split.tsv";
constexpr char kStatsFile[] = "stats.txt";
constexpr char kTensorFile[] = "tensors.bin";
constexpr char kConfigFile[] = "config.txt";
constexpr char kCvTableFile[] = "cv_table.csv";
constexpr char kManifestFile[] = "manifest.txt";

void EnsureDirectory(const fs::path& dir) {
  if (dir.empty()) throw IoError("empty directory path");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw IoError("cannot create directory " + dir.string());
  }
}

void RequireFile(const fs::path& path) {
  if (!fs::is_regular_file(path)) throw IoError("missing file " + path.string());
}

std::string MemberFile(std::size_t i) {
  char name[32];
  std::snprintf(name, sizeof(name), "member_%02zu.ckpt", i);
  return name;
}

struct SplitEntry {
  std::string admission_id;
  int label;
  bool test;
};

void WriteSplit(const std::vector<SplitEntry>& entries, const fs::path& path) {
  std::ofstream out = io::OpenForWrite(path);
  out << "admission_id\tlabel\tpartition\n";
  for (const SplitEntry& e : entries) {
    out << e.admission_id << '\t' << e.label << '\t'
        << (e.test ? "test" : "train") << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<SplitEntry> ReadSplit(const fs::path& path) {
  std::ifstream in = io::OpenForRead(path);
  std::string line;
  if (!std::getline(in, line) || line != "admission_id\tlabel\tpartition") {
    throw IoError("missing split header in " + path.string());
  }
  std::vector<SplitEntry> entries;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto t1 = line.find('\t');
    const auto t2 = line.find('\t', t1 + 1);
    if (t1 == std::string::npos || t2 == std::string::npos) {
      throw IoError("malformed split row: " + line);
    }
    const std::string partition = line.substr(t2 + 1);
    if (partition != "train" && partition != "test") {
      throw IoError("unknown partition: " + partition);
    }
    entries.push_back({line.substr(0, t1),
                       static_cast<int>(io::ParseInt(
                           std::string_view(line).substr(t1 + 1, t2 - t1 - 1))),
                       partition == "test"});
  }
  return entries;
}

// Tensors of one partition, in split-file order.
std::vector<SampleTensor> PartitionTensors(const fs::path& prep_dir,
                                           bool test) {
  const std::vector<SplitEntry> split = ReadSplit(prep_dir / kSplitFile);
  std::vector<SampleTensor> all = ReadTensors(prep_dir / kTensorFile);
  std::unordered_map<std::string, std::size_t> index_of;
  for (std::size_t i = 0; i < all.size(); ++i) {
    index_of.emplace(all[i].admission_id, i);
  }
  std::vector<SampleTensor> out;
  for (const SplitEntry& e : split) {
    if (e.test != test) continue;
    const auto it = index_of.find(e.admission_id);
    if (it == index_of.end()) {
      throw IoError("tensor cache lacks admission " + e.admission_id);
    }
    out.push_back(std::move(all[it->second]));
  }
  return out;
}

std::vector<int> LabelsOf(const std::vector<SampleTensor>& tensors) {
  std::vector<int> labels;
  for (const SampleTensor& t : tensors) labels.push_back(t.label);
  return labels;
}

void WriteCvTable(const std::vector<CvRecord>& records, const fs::path& path) {
  std::ofstream out = io::OpenForWrite(path);
  out << "hidden,lr,fold,best_epoch,val_pr_auc\n";
  for (const CvRecord& r : records) {
    out << r.hidden_size << ',' << io::FormatDouble(r.learning_rate) << ','
        << r.fold << ',' << r.best_epoch << ',' << io::FormatDouble(r.val_pr_auc)
        << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

std::map<std::string, std::string> HyperSnapshot(const HyperParams& h,
                                                 const std::string& prefix) {
  return {
      {prefix + "hidden_size", std::to_string(h.hidden_size)},
      {prefix + "learning_rate", io::FormatDouble(h.learning_rate)},
      {prefix + "max_epochs", std::to_string(h.max_epochs)},
      {prefix + "w_pos", io::FormatDouble(h.w_pos)},
      {prefix + "w_neg", io::FormatDouble(h.w_neg)},
      {prefix + "batch_size", std::to_string(h.batch_size)},
      {prefix + "seed", std::to_string(h.seed)},
      {prefix + "patience", std::to_string(h.patience)},
      {prefix + "target_pr_auc", io::FormatDouble(h.target_pr_auc)},
  };
}

void WriteManifest(const fs::path& run_dir, const fs::path& prep_dir,
                   const std::vector<std::string>& run_files) {
  std::ofstream out = io::OpenForWrite(run_dir / kManifestFile);
  out << "# sha256  file\n";
  for (const char* input : {kSplitFile, kStatsFile, kTensorFile}) {
    out << io::Sha256File(prep_dir / input) << "  prep/" << input << '\n';
  }
  for (const std::string& name : run_files) {
    out << io::Sha256File(run_dir / name) << "  " << name << '\n';
  }
  if (!out) throw IoError("write failed: manifest");
}

}  // namespace

GenerateSummary RunGenerate(const GenerateOptions& options, std::ostream* log) {
  const std::vector<PatientSeries> cohort = GenerateCohort(options.cohort);
  if (options.out.has_parent_path()) EnsureDirectory(options.out.parent_path());
  WriteCohort(cohort, options.out);
  GenerateSummary summary;
  summary.admissions = cohort.size();
  for (const PatientSeries& s : cohort) {
    summary.positives += s.label == 1 ? 1 : 0;
    for (const auto& [name, channel] : s.channels) {
      summary.measurements += channel.size();
    }
  }
  if (log) {
    *log << "generated " << summary.admissions << " admissions ("
         << summary.positives << " positive, " << summary.measurements
         << " measurements) -> " << options.out.string() << '\n';
  }
  return summary;
}

PreprocessSummary RunPreprocess(const PreprocessOptions& options,
                                std::ostream* log) {
  RequireFile(options.cohort);
  EnsureDirectory(options.out_dir);
  const auto& specs = DefaultVariableSpecs();
  std::vector<PatientSeries> cohort = ReadCohort(options.cohort);

  PreprocessSummary summary;
  for (PatientSeries& series : cohort) {
    FilterResult filtered = FilterOutliers(series, specs);
    summary.outliers_removed += filtered.removed_count;
    series = std::move(filtered.series);
  }

  std::vector<int> labels;
  for (const PatientSeries& s : cohort) labels.push_back(s.label);
  const Split split = StratifiedSplit(labels, options.test_fraction, options.seed);
  std::vector<SplitEntry> entries;
  std::vector<bool> in_test(cohort.size(), false);
  for (std::size_t i : split.test) in_test[i] = true;
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    entries.push_back({cohort[i].admission_id, cohort[i].label, in_test[i]});
  }
  WriteSplit(entries, options.out_dir / kSplitFile);

  std::vector<PatientSeries> train_series;
  for (std::size_t i : split.train) train_series.push_back(cohort[i]);
  const NormStats stats = FitNormalizer(train_series, specs);
  train_series.clear();
  WriteNormStats(stats, specs, options.out_dir / kStatsFile);

  std::vector<SampleTensor> tensors;
  tensors.reserve(cohort.size());
  for (const PatientSeries& s : cohort) {
    tensors.push_back(BuildTensor(s, specs, stats));
  }
  WriteTensors(tensors, options.out_dir / kTensorFile);

  summary.tensors = tensors.size();
  summary.train = split.train.size();
  summary.test = split.test.size();
  for (std::size_t i : split.test) summary.test_positives += labels[i];
  if (log) {
    *log << "preprocessed " << summary.tensors << " admissions (train "
         << summary.train << ", test " << summary.test << " with "
         << summary.test_positives << " positive), removed "
         << summary.outliers_removed << " outliers\n";
  }
  return summary;
}

TrainSummary RunTrain(const TrainOptions& options, std::ostream* log) {
  options.hyper.Validate();
  if (options.folds < 2) throw ConfigError("need at least 2 folds");
  for (const char* f : {kSplitFile, kStatsFile, kTensorFile}) {
    RequireFile(options.prep_dir / f);
  }
  EnsureDirectory(options.run_dir);
  const NormStats stats =
      ReadNormStats(DefaultVariableSpecs(), options.prep_dir / kStatsFile);
  const std::vector<SampleTensor> train =
      PartitionTensors(options.prep_dir, /*test=*/false);
  const FoldPlan folds =
      MakeFolds(LabelsOf(train), options.folds, options.hyper.seed);

  HyperParams selected = options.hyper;
  std::vector<CvRecord> table;
  if (options.grid) {
    const std::vector<HyperParams> grid = DefaultGrid(options.hyper);
    const GridResult result = GridSearch(train, folds, grid, options.jobs);
    selected = result.best;
    table = result.records;
    if (log) {
      for (const GridCell& cell : result.cells) {
        *log << "cell hidden=" << cell.hyper.hidden_size
             << " lr=" << cell.hyper.learning_rate
             << " mean_val_pr_auc=" << cell.mean_val_pr_auc << '\n';
      }
    }
  }
  const EnsembleFit fit =
      FitEnsemble(train, folds, selected, stats, options.jobs);
  if (!options.grid) table = fit.records;

  TrainSummary summary;
  summary.selected = selected;
  summary.members = fit.ensemble.members.size();
  summary.cv_rows = table.size();
  for (const CvRecord& r : fit.records) summary.cv_mean_val_pr_auc += r.val_pr_auc;
  summary.cv_mean_val_pr_auc /= static_cast<double>(fit.records.size());

  std::vector<std::string> files = {kConfigFile, kCvTableFile};
  std::map<std::string, std::string> config = HyperSnapshot(options.hyper, "base.");
  for (const auto& kv : HyperSnapshot(selected, "selected.")) config.insert(kv);
  config["grid"] = options.grid ? "true" : "false";
  config["folds"] = std::to_string(options.folds);
  config["fold_seed"] = std::to_string(options.hyper.seed);
  config["members"] = std::to_string(summary.members);
  config["selected.cv_mean_val_pr_auc"] =
      io::FormatDouble(summary.cv_mean_val_pr_auc);
  io::WriteKeyValues(options.run_dir / kConfigFile, config);
  WriteCvTable(table, options.run_dir / kCvTableFile);
  for (std::size_t i = 0; i < fit.ensemble.members.size(); ++i) {
    WriteCheckpoint(fit.ensemble.members[i], options.run_dir / MemberFile(i));
    files.push_back(MemberFile(i));
  }
  WriteManifest(options.run_dir, options.prep_dir, files);

  if (log) {
    *log << "trained " << summary.members << "-member ensemble (hidden="
         << selected.hidden_size << ", lr=" << selected.learning_rate
         << ", mean val PR AUC=" << summary.cv_mean_val_pr_auc << ")\n";
  }
  return summary;
}

Ensemble LoadEnsemble(const fs::path& prep_dir, const fs::path& run_dir) {
  const auto config = io::ReadKeyValues(run_dir / kConfigFile);
  const auto members = config.find("members");
  if (members == config.end()) throw IoError("run config lacks members");
  Ensemble ensemble;
  ensemble.stats = ReadNormStats(DefaultVariableSpecs(), prep_dir / kStatsFile);
  const auto count = io::ParseInt(members->second);
  for (std::int64_t i = 0; i < count; ++i) {
    const fs::path path = run_dir / MemberFile(static_cast<std::size_t>(i));
    RequireFile(path);
    ensemble.members.push_back(ReadCheckpoint(path));
    if (ensemble.members.back().hidden_size !=
        ensemble.members.front().hidden_size) {
      throw ShapeError("ensemble members disagree on hidden size");
    }
  }
  if (ensemble.members.empty()) throw ContractError("empty ensemble");
  return ensemble;
}

EvalReport RunEvaluate(const EvaluateOptions& options, std::ostream* log) {
  for (const char* f : {kSplitFile, kStatsFile, kTensorFile}) {
    RequireFile(options.prep_dir / f);
  }
  RequireFile(options.run_dir / kConfigFile);
  EnsureDirectory(options.out_dir);
  const Ensemble ensemble = LoadEnsemble(options.prep_dir, options.run_dir);
  const std::vector<SampleTensor> test =
      PartitionTensors(options.prep_dir, /*test=*/true);
  const std::vector<int> labels = LabelsOf(test);

  std::vector<double> scores;
  scores.reserve(test.size());
  for (const SampleTensor& t : test) {
    scores.push_back(EnsemblePredict(ensemble, t));
  }
  const PrCurve curve = BuildPrCurve(scores, labels);

  EvalReport report;
  report.test_pr_auc = curve.auc;
  report.baseline1_pr_auc = BaselineConstant(labels);
  report.baseline2_pr_auc = BaselineProportional(labels, options.seed);
  report.baseline2_seed = options.seed;
  report.n = labels.size();
  report.n_pos = static_cast<std::size_t>(
      std::count(labels.begin(), labels.end(), 1));
  report.prevalence =
      static_cast<double>(report.n_pos) / static_cast<double>(report.n);
  const auto config = io::ReadKeyValues(options.run_dir / kConfigFile);
  if (const auto it = config.find("selected.cv_mean_val_pr_auc");
      it != config.end()) {
    report.cv_val_pr_auc = io::ParseDouble(it->second);
  }

  WriteEvalReport(report, options.out_dir / "report.txt");
  ExportCurveCsv(curve, options.out_dir / "pr_curve.csv");
  ExportCurveSvg(curve, options.out_dir / "pr_curve.svg");
  if (log) {
    *log << "test PR AUC " << report.test_pr_auc << " (baseline1 "
         << report.baseline1_pr_auc << ", baseline2 " << report.baseline2_pr_auc
         << ", prevalence " << report.prevalence << ")\n";
  }
  return report;
}

PipelineOptions PipelineOptions::Quick() {
  PipelineOptions options;
  options.cohort.n_admissions = 300;
  options.cohort.n_positive = 40;
  options.hyper.hidden_size = 10;
  options.hyper.learning_rate = 0.01;
  options.hyper.max_epochs = 20;
  return options;
}

PipelineResult RunPipeline(const PipelineOptions& options, std::ostream* log) {
  EnsureDirectory(options.work_dir);
  GenerateOptions generate;
  generate.cohort = options.cohort;
  generate.cohort.seed = options.seed;
  generate.out = options.work_dir / "cohort.tsv";
  RunGenerate(generate, log);

  PreprocessOptions preprocess;
  preprocess.cohort = generate.out;
  preprocess.out_dir = options.work_dir / "prep";
  preprocess.test_fraction = options.test_fraction;
  preprocess.seed = options.seed;
  RunPreprocess(preprocess, log);

  TrainOptions train;
  train.prep_dir = preprocess.out_dir;
  train.run_dir = options.work_dir / "run";
  train.hyper = options.hyper;
  train.hyper.seed = options.seed;
  train.grid = options.grid;
  train.folds = options.folds;
  train.jobs = options.jobs;
  RunTrain(train, log);

  EvaluateOptions evaluate;
  evaluate.prep_dir = preprocess.out_dir;
  evaluate.run_dir = train.run_dir;
  evaluate.out_dir = options.work_dir / "eval";
  evaluate.seed = options.seed;

  PipelineResult result;
  result.report = RunEvaluate(evaluate, log);
  result.summary_line =
      "test_pr_auc=" + io::FormatDouble(result.report.test_pr_auc) +
      " baseline1=" + io::FormatDouble(result.report.baseline1_pr_auc) +
      " baseline2=" + io::FormatDouble(result.report.baseline2_pr_auc);
  return result;
}

}  // namespace hemocult
