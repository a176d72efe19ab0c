#pragma once

// Umbrella header for the binarization-aware adjuster library.

#include "baa/adam.hpp"
#include "baa/adjuster.hpp"
#include "baa/calibration.hpp"
#include "baa/data_io.hpp"
#include "baa/dwf.hpp"
#include "baa/grid.hpp"
#include "baa/loss.hpp"
#include "baa/metrics.hpp"
#include "baa/model.hpp"
#include "baa/train.hpp"
