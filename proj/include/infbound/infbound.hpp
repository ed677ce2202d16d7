#pragma once

#include "barrier.hpp"
#include "doubling.hpp"
#include "errors.hpp"
#include "grid.hpp"
#include "lipschitz.hpp"
#include "parallel.hpp"
#include "report.hpp"
#include "solver.hpp"
#include "viscosity.hpp"
