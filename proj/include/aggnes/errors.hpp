// Copyright 2026 The aggnes Authors
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

#ifndef AGGNES_ERRORS_HPP_
#define AGGNES_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace aggnes {

// Root of every error thrown by the library. Callers that only need a
// message can catch this; the CLI maps the subclasses onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Vector or matrix dimensions do not match the game / graph they are used
// with.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Malformed scenario or schedule document.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Standing hypotheses of the convergence result. The string ids are what
// reports and the CLI print.
enum class Assumption {
  kStrongMonotonicity,
  kLipschitzPseudoGradient,
  kLipschitzExtendedGradient,
  kBoundedAggregateJacobian,
  kJointConnectivity,
  kWeightBalance,
  kZeroMultiplierSum,
};

const char* assumption_id(Assumption a);

class AssumptionViolation : public Error {
 public:
  AssumptionViolation(Assumption which, const std::string& detail)
      : Error(std::string("assumption violated [") + assumption_id(which) +
              "]: " + detail),
        which_(which) {}

  Assumption which() const { return which_; }

 private:
  Assumption which_;
};

// The centralized equilibrium solver did not reach its tolerance.
class OracleFailure : public Error {
 public:
  OracleFailure(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

// A finite schedule was queried past its last segment.
class ScheduleExhausted : public Error {
 public:
  using Error::Error;
};

// The Lyapunov integral was truncated too early for the requested tail
// bound.
class HorizonTooShort : public Error {
 public:
  HorizonTooShort(const std::string& what, double suggested)
      : Error(what), suggested_horizon_(suggested) {}
  double suggested_horizon() const { return suggested_horizon_; }

 private:
  double suggested_horizon_;
};

}  // namespace aggnes

#endif  // AGGNES_ERRORS_HPP_
