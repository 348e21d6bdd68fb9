// docws/errors.hpp

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

#ifndef DOCWS_ERRORS_HPP_
#define DOCWS_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace docws {

/// Malformed input or a violated precondition. The CLI maps it to exit code 1.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string &what) : std::runtime_error(what) {}
};

/// Filesystem failure (missing file, unwritable directory). CLI exit code 2.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string &what) : std::runtime_error(what) {}
};

}  // namespace docws

#endif  // DOCWS_ERRORS_HPP_
