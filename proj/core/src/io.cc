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

#include "hemocult/io.h"

#include <openssl/evp.h>

#include <array>
#include <bit>
#include <charconv>
#include <memory>

#include "hemocult/errors.h"

namespace hemocult::io {

std::string FormatDouble(double value) {
  std::array<char, 64> buffer;
  const auto result =
      std::to_chars(buffer.data(), buffer.data() + buffer.size(), value);
  return std::string(buffer.data(), result.ptr);
}

double ParseDouble(std::string_view text) {
  double value = 0.0;
  const auto result =
      std::from_chars(text.data(), text.data() + text.size(), value);
  if (result.ec != std::errc() || result.ptr != text.data() + text.size()) {
    throw IoError("malformed number: '" + std::string(text) + "'");
  }
  return value;
}

std::int64_t ParseInt(std::string_view text) {
  std::int64_t value = 0;
  const auto result =
      std::from_chars(text.data(), text.data() + text.size(), value);
  if (result.ec != std::errc() || result.ptr != text.data() + text.size()) {
    throw IoError("malformed integer: '" + std::string(text) + "'");
  }
  return value;
}

std::ofstream OpenForWrite(const std::filesystem::path& path, bool binary) {
  if (path.empty()) throw IoError("empty output path");
  std::ofstream out(path, binary ? std::ios::out | std::ios::binary
                                 : std::ios::out);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  return out;
}

std::ifstream OpenForRead(const std::filesystem::path& path, bool binary) {
  if (path.empty()) throw IoError("empty input path");
  std::ifstream in(path, binary ? std::ios::in | std::ios::binary
                                : std::ios::in);
  if (!in) throw IoError("cannot open for reading: " + path.string());
  return in;
}

void WriteU32(std::ostream& out, std::uint32_t value) {
  std::array<char, 4> bytes;
  for (int i = 0; i < 4; ++i) {
    bytes[i] = static_cast<char>((value >> (8 * i)) & 0xffu);
  }
  out.write(bytes.data(), bytes.size());
}

void WriteF64(std::ostream& out, double value) {
  const auto bits = std::bit_cast<std::uint64_t>(value);
  std::array<char, 8> bytes;
  for (int i = 0; i < 8; ++i) {
    bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xffu);
  }
  out.write(bytes.data(), bytes.size());
}

void WriteF64s(std::ostream& out, std::span<const double> values) {
  for (double v : values) WriteF64(out, v);
}

std::uint32_t ReadU32(std::istream& in) {
  std::array<unsigned char, 4> bytes;
  in.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
  if (!in) throw IoError("truncated binary file");
  std::uint32_t value = 0;
  for (int i = 0; i < 4; ++i) value |= std::uint32_t{bytes[i]} << (8 * i);
  return value;
}

double ReadF64(std::istream& in) {
  std::array<unsigned char, 8> bytes;
  in.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
  if (!in) throw IoError("truncated binary file");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= std::uint64_t{bytes[i]} << (8 * i);
  return std::bit_cast<double>(bits);
}

void ReadF64s(std::istream& in, std::span<double> values) {
  for (double& v : values) v = ReadF64(in);
}

void WriteKeyValues(const std::filesystem::path& path,
                    const std::map<std::string, std::string>& values) {
  std::ofstream out = OpenForWrite(path);
  for (const auto& [key, value] : values) out << key << '=' << value << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

std::map<std::string, std::string> ReadKeyValues(
    const std::filesystem::path& path) {
  std::ifstream in = OpenForRead(path);
  std::map<std::string, std::string> values;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw IoError("expected key=value in " + path.string() + ": " + line);
    }
    values[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return values;
}

std::string Sha256File(const std::filesystem::path& path) {
  std::ifstream in = OpenForRead(path, /*binary=*/true);
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(
      EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
    throw IoError("sha256 init failed");
  }
  std::array<char, 1 << 16> buffer;
  while (in) {
    in.read(buffer.data(), buffer.size());
    const std::streamsize got = in.gcount();
    if (got > 0) EVP_DigestUpdate(ctx.get(), buffer.data(), got);
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest;
  unsigned int length = 0;
  EVP_DigestFinal_ex(ctx.get(), digest.data(), &length);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  hex.reserve(2 * length);
  for (unsigned int i = 0; i < length; ++i) {
    hex.push_back(kHex[digest[i] >> 4]);
    hex.push_back(kHex[digest[i] & 0xf]);
  }
  return hex;
}

}  // namespace hemocult::io
