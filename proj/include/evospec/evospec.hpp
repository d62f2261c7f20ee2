#pragma once

#include "blocks.hpp"
#include "core.hpp"
#include "detect.hpp"
#include "errors.hpp"
#include "kernels.hpp"
#include "montecarlo.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "simulate.hpp"
#include "spectral.hpp"
#include "stats.hpp"
