#pragma once

#include "errors.hpp"
#include "rng.hpp"
#include "stats.hpp"
#include "parallel.hpp"
#include "lattice.hpp"
#include "potential.hpp"
#include "distribution.hpp"
#include "model.hpp"
#include "charfun.hpp"
#include "spectral.hpp"
#include "oracles.hpp"
#include "experiments/common.hpp"
#include "experiments/wegner.hpp"
#include "experiments/ils.hpp"
#include "experiments/msa.hpp"
#include "experiments/ensemble.hpp"
#include "io.hpp"
