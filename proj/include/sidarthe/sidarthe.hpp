#pragma once

// Umbrella header: the whole library.

#include "sidarthe/csv.hpp"
#include "sidarthe/data.hpp"
#include "sidarthe/errors.hpp"
#include "sidarthe/fit.hpp"
#include "sidarthe/flatten.hpp"
#include "sidarthe/forecast.hpp"
#include "sidarthe/gradient.hpp"
#include "sidarthe/grid.hpp"
#include "sidarthe/integrate.hpp"
#include "sidarthe/loss.hpp"
#include "sidarthe/metrics.hpp"
#include "sidarthe/model.hpp"
#include "sidarthe/observations.hpp"
#include "sidarthe/params.hpp"
#include "sidarthe/pool.hpp"
#include "sidarthe/rates.hpp"
#include "sidarthe/schedule.hpp"
#include "sidarthe/state.hpp"
#include "sidarthe/sweep.hpp"
#include "sidarthe/synthetic.hpp"
#include "sidarthe/tying.hpp"
#include "sidarthe/version.hpp"
