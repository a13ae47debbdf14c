#pragma once

#include "bidsim/market.hpp"
#include "bidsim/instance_io.hpp"
#include "bidsim/rng.hpp"
#include "bidsim/policies.hpp"
#include "bidsim/equilibrium.hpp"
#include "bidsim/experiment.hpp"
#include "bidsim/reports.hpp"
