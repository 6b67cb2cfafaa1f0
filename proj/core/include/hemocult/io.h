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

// Small file-format helpers shared by the cohort, tensor, checkpoint and
// report writers.

#ifndef HEMOCULT_IO_H_
#define HEMOCULT_IO_H_

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <string_view>

namespace hemocult::io {

// Shortest decimal that parses back to the identical double.
std::string FormatDouble(double value);

// Strict full-string parses; throw IoError on garbage.
double ParseDouble(std::string_view text);
std::int64_t ParseInt(std::string_view text);

std::ofstream OpenForWrite(const std::filesystem::path& path,
                           bool binary = false);
std::ifstream OpenForRead(const std::filesystem::path& path,
                          bool binary = false);

// Little-endian primitives, independent of host byte order.
void WriteU32(std::ostream& out, std::uint32_t value);
void WriteF64(std::ostream& out, double value);
void WriteF64s(std::ostream& out, std::span<const double> values);
std::uint32_t ReadU32(std::istream& in);
double ReadF64(std::istream& in);
void ReadF64s(std::istream& in, std::span<double> values);

// key=value text, one pair per line, keys sorted. Lines starting with '#'
// are comments.
void WriteKeyValues(const std::filesystem::path& path,
                    const std::map<std::string, std::string>& values);
std::map<std::string, std::string> ReadKeyValues(
    const std::filesystem::path& path);

// Lowercase hex SHA-256 of the file's bytes.
std::string Sha256File(const std::filesystem::path& path);

}  // namespace hemocult::io

#endif  // HEMOCULT_IO_H_
