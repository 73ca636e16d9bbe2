#pragma once

// Umbrella header: template-based image reconstruction from sparse tomographic
// measurements by deforming a known template with transport or continuity
// dynamics, optimized with an inexact multilevel Gauss-Newton-Krylov method.

#include "tbir/bspline.hpp"
#include "tbir/distance.hpp"
#include "tbir/fbp.hpp"
#include "tbir/flow.hpp"
#include "tbir/grid.hpp"
#include "tbir/io.hpp"
#include "tbir/noise.hpp"
#include "tbir/optimizer.hpp"
#include "tbir/phantom.hpp"
#include "tbir/radon.hpp"
#include "tbir/regularizer.hpp"
#include "tbir/solution_map.hpp"
#include "tbir/ssim.hpp"
#include "tbir/velocity.hpp"
