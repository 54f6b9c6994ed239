// Copyright 2026 The smoothmech Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SMOOTHMECH_COMMON_HPP_
#define SMOOTHMECH_COMMON_HPP_

#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>

namespace smoothmech {

inline constexpr double kTolerance = 1e-9;
inline constexpr double kCertificateTolerance = 1e-7;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Raised when an input violates an operation's precondition.
class DomainError : public std::domain_error {
 public:
  explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

// Raised when an enumeration would exceed a configured size cap.
class SizeError : public std::length_error {
 public:
  SizeError(const std::string& what, std::size_t requested, std::size_t cap)
      : std::length_error(what + " (requested " + std::to_string(requested) +
                          ", cap " + std::to_string(cap) + ")"),
        requested_(requested),
        cap_(cap) {}
  std::size_t requested() const { return requested_; }
  std::size_t cap() const { return cap_; }

 private:
  std::size_t requested_;
  std::size_t cap_;
};

// Raised on numeric breakdown inside a solver.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace smoothmech

#endif  // SMOOTHMECH_COMMON_HPP_
