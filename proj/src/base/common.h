// base/common.h

// Copyright 2026  cmkit authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CMKIT_BASE_COMMON_H_
#define CMKIT_BASE_COMMON_H_

#include <cstdint>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace cmkit {

typedef int32_t int32;
typedef int64_t int64;
typedef uint32_t uint32;
typedef uint64_t uint64;

// All DSP and network math is done in double precision; the oracle
// tolerances in the test suite assume it.
typedef double real;

// Base error type.  Subclasses distinguish the failure classes that the
// CLI and the tests care about.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string &msg) : std::runtime_error(msg) {}
};

// A caller violated an operation's precondition.
class InvalidInputError : public Error {
 public:
  explicit InvalidInputError(const std::string &msg) : Error(msg) {}
};

// Malformed external data (WAV header, manifest line, ...).
class FormatError : public Error {
 public:
  explicit FormatError(const std::string &msg) : Error(msg) {}
};

// Tensor/matrix dimensions do not line up.
class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string &msg) : Error(msg) {}
};

// Contradictory or incomplete run configuration.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string &msg) : Error(msg) {}
};

// Non-finite value where a finite one is required.
class NumericError : public Error {
 public:
  explicit NumericError(const std::string &msg) : Error(msg) {}
};

// Text input that cannot be parsed; message carries the line number.
class ParseError : public Error {
 public:
  explicit ParseError(const std::string &msg) : Error(msg) {}
};

// A measurement (e.g. reverberation-time fit) has no usable support.
class EstimationError : public Error {
 public:
  explicit EstimationError(const std::string &msg) : Error(msg) {}
};

// File-system level failure.
class IoError : public Error {
 public:
  explicit IoError(const std::string &msg) : Error(msg) {}
};

namespace internal {

class LogMessage {
 public:
  LogMessage(const char *tag, const char *file, int line) {
    os_ << tag << " (" << file << ":" << line << ") ";
  }
  ~LogMessage() { std::cerr << os_.str() << std::endl; }
  std::ostream &stream() { return os_; }

 private:
  std::ostringstream os_;
};

template <class E>
class ThrowMessage {
 public:
  ThrowMessage(const char *file, int line) {
    os_ << "(" << file << ":" << line << ") ";
  }
  [[noreturn]] ~ThrowMessage() noexcept(false) { throw E(os_.str()); }
  std::ostream &stream() { return os_; }

 private:
  std::ostringstream os_;
};

}  // namespace internal

#define CMKIT_LOG \
  ::cmkit::internal::LogMessage("LOG", __FILE__, __LINE__).stream()
#define CMKIT_WARN \
  ::cmkit::internal::LogMessage("WARNING", __FILE__, __LINE__).stream()

// CMKIT_ERR(ShapeError) << "bad shape ...";  throws at end of statement.
#define CMKIT_ERR(ErrType) \
  ::cmkit::internal::ThrowMessage<::cmkit::ErrType>(__FILE__, __LINE__).stream()

#define CMKIT_ASSERT(cond)                                            \
  do {                                                                \
    if (!(cond))                                                      \
      throw ::cmkit::Error(std::string("Assertion failed: ") + #cond + \
                           " at " + __FILE__ + ":" +                  \
                           std::to_string(__LINE__));                 \
  } while (0)

}  // namespace cmkit

#endif  // CMKIT_BASE_COMMON_H_
