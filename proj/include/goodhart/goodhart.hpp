#pragma once

// Umbrella header for the whole library.

#include "analysis.hpp"
#include "closed_forms.hpp"
#include "constants.hpp"
#include "distributions.hpp"
#include "error.hpp"
#include "feedback_sim.hpp"
#include "io.hpp"
#include "monte_carlo.hpp"
#include "parallel.hpp"
#include "quadrature.hpp"
#include "rng.hpp"
#include "scenario.hpp"
#include "stats.hpp"
#include "truncation.hpp"
#include "worst_case.hpp"
