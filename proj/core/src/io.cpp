// core/src/io.cpp

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

#include "docws/io.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <sstream>
#include <system_error>

#include "docws/errors.hpp"

namespace docws {

namespace fs = std::filesystem;

std::string ReadFile(const fs::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void WriteFileAtomic(const fs::path &path, const std::string &content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) throw IoError("write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot rename onto '" + path.string() + "'");
  }
}

StagedDirectory::StagedDirectory(fs::path target) : target_(std::move(target)) {
  staging_ = target_;
  staging_ += ".staging";
  std::error_code ec;
  fs::remove_all(staging_, ec);
  if (!fs::create_directories(staging_, ec) || ec)
    throw IoError("cannot create directory '" + staging_.string() + "'");
}

StagedDirectory::~StagedDirectory() {
  if (!committed_) {
    std::error_code ec;
    fs::remove_all(staging_, ec);
  }
}

void StagedDirectory::Commit() {
  std::error_code ec;
  fs::remove_all(target_, ec);
  fs::rename(staging_, target_, ec);
  if (ec) throw IoError("cannot move output into '" + target_.string() + "'");
  committed_ = true;
}

namespace {

std::string Trim(const std::string &s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string Where(const KeyValue &kv) {
  return "config line " + std::to_string(kv.line) + " ('" + kv.key + "')";
}

}  // namespace

std::vector<KeyValue> ParseKeyValues(std::istream &in) {
  std::vector<KeyValue> out;
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = Trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ValidationError("config line " + std::to_string(no) + ": expected key = value");
    KeyValue kv{Trim(line.substr(0, eq)), Trim(line.substr(eq + 1)), no};
    if (kv.key.empty())
      throw ValidationError("config line " + std::to_string(no) + ": empty key");
    out.push_back(std::move(kv));
  }
  return out;
}

std::vector<KeyValue> LoadKeyValues(const fs::path &path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path.string() + "'");
  return ParseKeyValues(in);
}

double ParseDouble(const KeyValue &kv) {
  try {
    std::size_t used = 0;
    double v = std::stod(kv.value, &used);
    if (used == kv.value.size()) return v;
  } catch (const std::exception &) {
  }
  throw ValidationError(Where(kv) + ": expected a number, got '" + kv.value + "'");
}

long long ParseInt(const KeyValue &kv) {
  long long v = 0;
  const char *b = kv.value.data(), *e = b + kv.value.size();
  auto [p, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || p != e)
    throw ValidationError(Where(kv) + ": expected an integer, got '" + kv.value + "'");
  return v;
}

bool ParseBool(const KeyValue &kv) {
  if (kv.value == "true" || kv.value == "1" || kv.value == "yes") return true;
  if (kv.value == "false" || kv.value == "0" || kv.value == "no") return false;
  throw ValidationError(Where(kv) + ": expected true/false, got '" + kv.value + "'");
}

std::string FormatDouble(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

}  // namespace docws
