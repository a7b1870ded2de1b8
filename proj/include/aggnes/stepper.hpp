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

#ifndef AGGNES_STEPPER_HPP_
#define AGGNES_STEPPER_HPP_

#include <cmath>

#include "aggnes/graph.hpp"

namespace aggnes {

// One classical Runge-Kutta step of y' = field(t, y). State is any Eigen
// dense type.
template <class State, class Field>
State rk4_step(const State& y, double t, double h, Field&& field) {
  const State k1 = field(t, y);
  const State k2 = field(t + 0.5 * h, State(y + (0.5 * h) * k1));
  const State k3 = field(t + 0.5 * h, State(y + (0.5 * h) * k2));
  const State k4 = field(t + h, State(y + h * k3));
  return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

// Why an observer is being called.
enum class SampleKind { kInitial, kStep, kSwitch, kFinal };

// Integrates y' = field(t, y, graph) over [t0, t1] against a switching
// schedule with nominal step h. Steps never straddle a switching instant:
// within each active interval the grid is begin + k h, and the last step is
// shortened to land on the interval end exactly.
//
// observe(t, y, graph, kind) is called for the initial point, after every
// step, and with kind kSwitch / kFinal at interval ends. At a switching
// instant `graph` is the newly active graph. Returning false from observe
// stops the run early. Returns the final state.
template <class State, class Field, class Observer>
State integrate_switched(const SwitchingSchedule& schedule, State y, double t0,
                         double t1, double h, Field&& field,
                         Observer&& observe) {
  const auto intervals = schedule.intervals(t0, t1);
  if (!observe(t0, y, intervals.front().graph, SampleKind::kInitial)) return y;
  for (std::size_t iv = 0; iv < intervals.size(); ++iv) {
    const ActiveInterval& seg = intervals[iv];
    const double span = seg.end - seg.begin;
    if (span <= 0.0) continue;
    const auto n_steps = static_cast<long long>(
        std::max(1.0, std::ceil(span / h - 1e-9)));
    auto f = [&](double t, const State& s) { return field(t, s, seg.graph); };
    double t = seg.begin;
    for (long long k = 1; k <= n_steps; ++k) {
      const double t_next =
          k == n_steps ? seg.end : seg.begin + static_cast<double>(k) * h;
      y = rk4_step(y, t, t_next - t, f);
      t = t_next;
      if (k < n_steps) {
        if (!observe(t, y, seg.graph, SampleKind::kStep)) return y;
      }
    }
    const bool last = iv + 1 == intervals.size();
    const int graph = last ? seg.graph : intervals[iv + 1].graph;
    if (!observe(t, y, graph, last ? SampleKind::kFinal : SampleKind::kSwitch)) {
      return y;
    }
  }
  return y;
}

}  // namespace aggnes

#endif  // AGGNES_STEPPER_HPP_
