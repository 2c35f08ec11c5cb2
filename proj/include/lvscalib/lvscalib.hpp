// lvscalib - spatiotemporal calibration of a line laser sensor on a robot arm

#ifndef LVSCALIB_LVSCALIB_HPP
#define LVSCALIB_LVSCALIB_HPP

#include "lvscalib/errors.hpp"
#include "lvscalib/liegeo.hpp"
#include "lvscalib/trajectory.hpp"
#include "lvscalib/residual.hpp"
#include "lvscalib/solver.hpp"
#include "lvscalib/synth.hpp"
#include "lvscalib/io.hpp"
#include "lvscalib/jacobian_check.hpp"
#include "lvscalib/commands.hpp"

#endif  // LVSCALIB_LVSCALIB_HPP
