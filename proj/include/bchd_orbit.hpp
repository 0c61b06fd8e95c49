#pragma once

#include "bchd_orbit/analysis.hpp"
#include "bchd_orbit/bchd.hpp"
#include "bchd_orbit/config.hpp"
#include "bchd_orbit/error.hpp"
#include "bchd_orbit/flow.hpp"
#include "bchd_orbit/io.hpp"
#include "bchd_orbit/jet.hpp"
#include "bchd_orbit/lie.hpp"
#include "bchd_orbit/lie_series.hpp"
#include "bchd_orbit/linalg.hpp"
#include "bchd_orbit/models.hpp"
#include "bchd_orbit/solve.hpp"
#include "bchd_orbit/system.hpp"
#include "bchd_orbit/units.hpp"
#include "bchd_orbit/vector_field.hpp"
