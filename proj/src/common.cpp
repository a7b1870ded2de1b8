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

#include <cmath>
#include <numbers>

#include "aggnes/errors.hpp"
#include "aggnes/rng.hpp"

namespace aggnes {

const char* assumption_id(Assumption a) {
  switch (a) {
    case Assumption::kStrongMonotonicity:
      return "strong-monotonicity";
    case Assumption::kLipschitzPseudoGradient:
      return "lipschitz-pseudo-gradient";
    case Assumption::kLipschitzExtendedGradient:
      return "lipschitz-extended-pseudo-gradient";
    case Assumption::kBoundedAggregateJacobian:
      return "bounded-aggregate-jacobian";
    case Assumption::kJointConnectivity:
      return "joint-connectivity";
    case Assumption::kWeightBalance:
      return "weight-balance";
    case Assumption::kZeroMultiplierSum:
      return "zero-multiplier-sum";
  }
  return "unknown";
}

double Rng::normal() {
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace aggnes
