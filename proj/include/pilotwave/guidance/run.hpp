#pragma once

#include "pilotwave/dynamics/timeline.hpp"
#include "pilotwave/guidance/trajectory.hpp"

namespace pilotwave::guidance {

/// A propagated run together with its velocity fields.
template <class State>
struct PilotRun {
  SystemModel model;
  dynamics::Timeline<State> timeline;
  VelocityTimeline flow;

  PilotRun(SystemModel m, dynamics::Timeline<State> tl, InterpolationOrder order = InterpolationOrder::Septic)
      : model(std::move(m)), timeline(std::move(tl)), flow(timeline, model, order) {}

  PilotRun(SystemModel m, dynamics::Timeline<State> tl, VelocityTimeline f)
      : model(std::move(m)), timeline(std::move(tl)), flow(std::move(f)) {}
};

template <class Stepper, class State>
PilotRun<State> simulate(const SystemModel& model, const State& initial, const Stepper& stepper, double dt,
                         long n_steps, long stride) {
  return PilotRun<State>(model, dynamics::propagate(initial, stepper, dt, n_steps, stride));
}

}  // namespace pilotwave::guidance
