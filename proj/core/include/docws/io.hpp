// docws/io.hpp

// Copyright 2026 The docws Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef DOCWS_IO_HPP_
#define DOCWS_IO_HPP_

#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace docws {

std::string ReadFile(const std::filesystem::path &path);

/// Writes to "<path>.tmp" and renames over path on success.
void WriteFileAtomic(const std::filesystem::path &path, const std::string &content);

/// A directory that is built under a temporary name and renamed into place by
/// Commit(). Without Commit() the temporary directory is removed.
class StagedDirectory {
 public:
  explicit StagedDirectory(std::filesystem::path target);
  ~StagedDirectory();
  StagedDirectory(const StagedDirectory &) = delete;
  StagedDirectory &operator=(const StagedDirectory &) = delete;

  const std::filesystem::path &path() const { return staging_; }
  std::filesystem::path operator/(const std::string &name) const { return staging_ / name; }
  void Commit();

 private:
  std::filesystem::path target_;
  std::filesystem::path staging_;
  bool committed_ = false;
};

/// Flat "key = value" configuration. '#' starts a comment; keys may repeat.
struct KeyValue {
  std::string key;
  std::string value;
  std::size_t line = 0;
};

std::vector<KeyValue> ParseKeyValues(std::istream &in);
std::vector<KeyValue> LoadKeyValues(const std::filesystem::path &path);

double ParseDouble(const KeyValue &kv);
long long ParseInt(const KeyValue &kv);
bool ParseBool(const KeyValue &kv);

/// Shortest round-trip decimal form of a double.
std::string FormatDouble(double v);

}  // namespace docws

#endif  // DOCWS_IO_HPP_
