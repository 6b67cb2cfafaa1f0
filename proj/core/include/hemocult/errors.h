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

#ifndef HEMOCULT_ERRORS_H_
#define HEMOCULT_ERRORS_H_

#include <stdexcept>
#include <string>

namespace hemocult {

// Base class for every error raised by the library. The command-line tool
// maps each subclass onto a stable process exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid user-supplied configuration (counts, rates, flags).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Reading or writing a file failed, or a file is malformed.
class IoError : public Error {
 public:
  using Error::Error;
};

// A record references a variable that is not among the nine known ones.
class SchemaError : public Error {
 public:
  using Error::Error;
};

// Vector/matrix dimensions disagree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// A caller broke a documented precondition (stale cache, empty ensemble).
class ContractError : public Error {
 public:
  using Error::Error;
};

// A negative admission has no measurements to derive an end time from.
class EmptySeriesError : public Error {
 public:
  using Error::Error;
};

// Normalization statistics cannot be fitted (a variable has no values).
class FitError : public Error {
 public:
  using Error::Error;
};

// Stratified partitioning is impossible (empty class, class smaller than k).
class StratificationError : public Error {
 public:
  using Error::Error;
};

// The precision-recall curve is undefined because there are no positives.
class UndefinedRecallError : public Error {
 public:
  using Error::Error;
};

// Training produced a non-finite loss.
class TrainingError : public Error {
 public:
  TrainingError(const std::string& what, int epoch, double loss)
      : Error(what), epoch_(epoch), loss_(loss) {}

  int epoch() const { return epoch_; }
  double loss() const { return loss_; }

 private:
  int epoch_;
  double loss_;
};

}  // namespace hemocult

#endif  // HEMOCULT_ERRORS_H_
