#pragma once

// Umbrella header.

#include "deconf/csv.hpp"
#include "deconf/datasets.hpp"
#include "deconf/effects.hpp"
#include "deconf/errors.hpp"
#include "deconf/projection.hpp"
#include "deconf/report.hpp"
#include "deconf/simulate.hpp"
#include "deconf/table.hpp"
