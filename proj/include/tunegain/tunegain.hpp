#pragma once

#include "tunegain/coverage_matrix.hpp"
#include "tunegain/error.hpp"
#include "tunegain/harness.hpp"
#include "tunegain/metrics.hpp"
#include "tunegain/parallel.hpp"
#include "tunegain/random.hpp"
#include "tunegain/regression.hpp"
#include "tunegain/search_space.hpp"
#include "tunegain/stats.hpp"
#include "tunegain/strategies.hpp"
#include "tunegain/synthetic.hpp"
#include "tunegain/tuning_gain.hpp"
