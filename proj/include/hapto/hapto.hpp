#pragma once

// Numerical core. io.hpp (yaml-cpp) and cli.hpp (CLI11) are included
// separately.

#include "hapto/errors.hpp"
#include "hapto/grid.hpp"
#include "hapto/mms.hpp"
#include "hapto/model.hpp"
#include "hapto/monitors.hpp"
#include "hapto/picard.hpp"
#include "hapto/spatial_ops.hpp"
#include "hapto/time_integration.hpp"
#include "hapto/transform.hpp"
