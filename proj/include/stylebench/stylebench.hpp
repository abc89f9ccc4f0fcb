#pragma once

#include "stylebench/archive.hpp"
#include "stylebench/bench.hpp"
#include "stylebench/config.hpp"
#include "stylebench/error.hpp"
#include "stylebench/genclient.hpp"
#include "stylebench/image.hpp"
#include "stylebench/image_io.hpp"
#include "stylebench/metrics.hpp"
#include "stylebench/report.hpp"
#include "stylebench/stylizer.hpp"
#include "stylebench/timing.hpp"
