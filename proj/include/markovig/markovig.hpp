#pragma once

// Information geometry of finite-state transition kernels: exponential and
// mixture families, divergence rates, Fisher information, projections,
// estimators, and exhaustive/Monte Carlo evaluation harnesses.

#include "markovig/divergence.hpp"
#include "markovig/errors.hpp"
#include "markovig/estimate.hpp"
#include "markovig/expfam.hpp"
#include "markovig/io.hpp"
#include "markovig/linalg.hpp"
#include "markovig/models.hpp"
#include "markovig/optim.hpp"
#include "markovig/pf.hpp"
#include "markovig/projection.hpp"
#include "markovig/rng.hpp"
#include "markovig/simulate.hpp"
