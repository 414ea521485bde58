#pragma once

// Umbrella header for the whole library.

#include "evit/efficacy.hpp"
#include "evit/errors.hpp"
#include "evit/experiment.hpp"
#include "evit/io.hpp"
#include "evit/population.hpp"
#include "evit/random.hpp"
#include "evit/similarity.hpp"
#include "evit/surrogate.hpp"
#include "evit/svg.hpp"
#include "evit/transfer.hpp"
#include "evit/valuation.hpp"
