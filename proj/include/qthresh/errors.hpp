// Copyright 2026 The qthresh Authors.
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

#ifndef QTHRESH_ERRORS_HPP_
#define QTHRESH_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace qthresh {

// All library failures derive from Error so callers can catch one type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of an operation (p, q not in
// [0, 1], negative multipliers, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Malformed or inconsistent input data: instance, scenario, problem.
class InputError : public Error {
 public:
  using Error::Error;
};

// A kernel estimate was evaluated before any sample arrived.
class EstimatorEmpty : public Error {
 public:
  EstimatorEmpty() : Error("kernel CDF estimate has no samples") {}
};

// A sample fell outside the support the estimator was built for.
class DataError : public Error {
 public:
  using Error::Error;
};

// Some type never appears in a reward-observed history.
class InvalidHistory : public Error {
 public:
  using Error::Error;
};

// Policy kind and history mode do not fit together.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Exact offline optimum requested for an instance that is too large.
class SizeError : public Error {
 public:
  using Error::Error;
};

}  // namespace qthresh

#endif  // QTHRESH_ERRORS_HPP_
