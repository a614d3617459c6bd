#pragma once

#include "legproj/analysis.hpp"
#include "legproj/error.hpp"
#include "legproj/estimator.hpp"
#include "legproj/experiment.hpp"
#include "legproj/legendre.hpp"
#include "legproj/rng.hpp"
#include "legproj/sampler.hpp"
#include "legproj/summation.hpp"
#include "legproj/testfam.hpp"
