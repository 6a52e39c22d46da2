#pragma once

#include "error.hpp"
#include "rng.hpp"
#include "symbolic_base.hpp"
#include "fiber_maps.hpp"
#include "skew_product.hpp"
#include "cylinder_union.hpp"
#include "drift_analysis.hpp"
#include "measure_family.hpp"
#include "config.hpp"
