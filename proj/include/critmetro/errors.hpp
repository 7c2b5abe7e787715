// Copyright 2026 The critmetro Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CRITMETRO_ERRORS_HPP
#define CRITMETRO_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace critmetro {

/// Argument outside the mathematical domain of a function (non-finite
/// parameter, nonpositive field, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Invalid configuration or construction parameters.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed input data (empty ensembles, bad CSV, non-uniform spacing, ...).
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Object used in a state that violates a precondition (e.g. unnormalized grid).
class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Query outside a tabulated range.
class RangeError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Numerical breakdown during a computation.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bayes update whose evidence vanished on the whole grid.
class DegenerateUpdateError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Dense problem too large for the brute-force oracle.
class SizeError : public std::length_error {
 public:
  using std::length_error::length_error;
};

}  // namespace critmetro

#endif  // CRITMETRO_ERRORS_HPP
