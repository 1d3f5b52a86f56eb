// Copyright 2026 The mvdid Authors
//
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

#pragma once

#include <functional>
#include <iostream>
#include <stdexcept>
#include <string>

namespace mvdid {

// Error taxonomy shared by the whole library. The CLI maps these onto
// exit codes: Config -> 2, Data/Dimension -> 3, Numeric -> 4.
enum class ErrorKind {
  Config,     // bad configuration file or option
  Data,       // malformed or inconsistent input data
  Dimension,  // shape/range mismatch between operands
  Numeric,    // numerical failure (not PSD, divergence, ...)
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void throw_config(const std::string& msg) {
  throw Error(ErrorKind::Config, msg);
}
[[noreturn]] inline void throw_data(const std::string& msg) {
  throw Error(ErrorKind::Data, msg);
}
[[noreturn]] inline void throw_dim(const std::string& msg) {
  throw Error(ErrorKind::Dimension, msg);
}
[[noreturn]] inline void throw_numeric(const std::string& msg) {
  throw Error(ErrorKind::Numeric, msg);
}

// Non-fatal diagnostics (empty manifest, component reseed, ...). Default
// sink is stderr; tests swap it to capture messages.
inline std::function<void(const std::string&)>& warning_handler() {
  static std::function<void(const std::string&)> handler =
      [](const std::string& msg) { std::cerr << "[mvdid] warning: " << msg << "\n"; };
  return handler;
}

inline void warn(const std::string& msg) { warning_handler()(msg); }

}  // namespace mvdid
