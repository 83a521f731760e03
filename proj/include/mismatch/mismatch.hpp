#pragma once

// Umbrella header for the whole library.

#include "mismatch/types.hpp"
#include "mismatch/numerics.hpp"
#include "mismatch/core.hpp"
#include "mismatch/worstcase.hpp"
#include "mismatch/structured.hpp"
#include "mismatch/gaussian.hpp"
#include "mismatch/csv.hpp"
