// docws/seed.hpp

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

#ifndef DOCWS_SEED_HPP_
#define DOCWS_SEED_HPP_

#include <cstdint>

namespace docws {

// Every random stream in the library is derived from one root seed.
enum class SeedStream : std::uint64_t {
  kSplit = 1,
  kShuffle = 2,
  kInit = 3,
  kSynthCorpus = 4,
  kSynthLfs = 5,
};

/// splitmix64 finalizer.
constexpr std::uint64_t Mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t DeriveSeed(std::uint64_t root, SeedStream stream) {
  return Mix64(Mix64(root) ^ static_cast<std::uint64_t>(stream));
}

}  // namespace docws

#endif  // DOCWS_SEED_HPP_
