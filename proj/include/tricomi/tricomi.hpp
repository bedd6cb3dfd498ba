#pragma once

#include "admissibility.hpp"
#include "errors.hpp"
#include "exponents.hpp"
#include "grid.hpp"
#include "initial_data.hpp"
#include "io.hpp"
#include "norms.hpp"
#include "parallel.hpp"
#include "picard.hpp"
#include "propagator.hpp"
#include "simulator.hpp"
#include "trace.hpp"
#include "transforms.hpp"
