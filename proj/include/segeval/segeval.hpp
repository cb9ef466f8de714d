#pragma once

#include "droid.hpp"
#include "ensemble.hpp"
#include "error.hpp"
#include "geometry.hpp"
#include "io.hpp"
#include "log.hpp"
#include "manifest.hpp"
#include "overlap.hpp"
#include "phantom.hpp"
#include "stats.hpp"
#include "surface.hpp"
#include "thickness.hpp"
#include "volume.hpp"

#include "report/analysis.hpp"
#include "report/config.hpp"
#include "report/outputs.hpp"
#include "report/pipeline.hpp"
