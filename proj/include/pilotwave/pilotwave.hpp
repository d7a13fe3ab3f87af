#pragma once

#include "pilotwave/core/constants.hpp"
#include "pilotwave/core/errors.hpp"
#include "pilotwave/core/fields.hpp"
#include "pilotwave/core/gauge_config.hpp"
#include "pilotwave/core/grid.hpp"
#include "pilotwave/core/interpolate.hpp"
#include "pilotwave/core/parallel.hpp"
#include "pilotwave/core/polar.hpp"
#include "pilotwave/core/spectral.hpp"
#include "pilotwave/dynamics/hamiltonian.hpp"
#include "pilotwave/dynamics/initial_states.hpp"
#include "pilotwave/dynamics/steppers.hpp"
#include "pilotwave/dynamics/system.hpp"
#include "pilotwave/dynamics/timeline.hpp"
#include "pilotwave/equilibrium/ensemble.hpp"
#include "pilotwave/equilibrium/h_function.hpp"
#include "pilotwave/equilibrium/relaxation.hpp"
#include "pilotwave/equilibrium/uniqueness.hpp"
#include "pilotwave/expr/expression.hpp"
#include "pilotwave/guidance/trajectory.hpp"
#include "pilotwave/gauge/invariance.hpp"
#include "pilotwave/gauge/transform.hpp"
#include "pilotwave/guidance/velocity.hpp"
#include "pilotwave/weylscale/log_scale.hpp"
#include "pilotwave/guidance/run.hpp"
#include "pilotwave/weylscale/density.hpp"
#include "pilotwave/weylscale/residuals.hpp"
