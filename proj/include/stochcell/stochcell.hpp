#pragma once

#include "stochcell/causality.hpp"
#include "stochcell/circuit.hpp"
#include "stochcell/factor_product.hpp"
#include "stochcell/factor_search.hpp"
#include "stochcell/finite_config.hpp"
#include "stochcell/gallery.hpp"
#include "stochcell/json_io.hpp"
#include "stochcell/pca.hpp"
#include "stochcell/random.hpp"
#include "stochcell/region.hpp"
#include "stochcell/state.hpp"
#include "stochcell/stoch_map.hpp"
