#pragma once

#include "cashadmm/admm.hpp"
#include "cashadmm/constraints.hpp"
#include "cashadmm/external.hpp"
#include "cashadmm/gp.hpp"
#include "cashadmm/harness.hpp"
#include "cashadmm/objective.hpp"
#include "cashadmm/random.hpp"
#include "cashadmm/search_space.hpp"
#include "cashadmm/solvers.hpp"
