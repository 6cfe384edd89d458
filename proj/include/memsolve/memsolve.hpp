#pragma once

// Numerical core: everything except the command-line workflows (memsolve/cli.hpp).

#include "memsolve/asymptotic_lab.hpp"
#include "memsolve/banded_lu.hpp"
#include "memsolve/error.hpp"
#include "memsolve/fixed_point.hpp"
#include "memsolve/grid.hpp"
#include "memsolve/membrane_map.hpp"
#include "memsolve/membrane_profile.hpp"
#include "memsolve/potential.hpp"
#include "memsolve/small_gap.hpp"
#include "memsolve/transformed_operator.hpp"
