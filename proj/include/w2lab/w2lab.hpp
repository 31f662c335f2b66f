#pragma once

// Umbrella header for the core library.  JSON serialization lives in
// json_io.hpp and is not pulled in here because it depends on the vendored
// nlohmann single header; include it explicitly where needed.

#include "convex_order.hpp"
#include "coupling.hpp"
#include "decomposition.hpp"
#include "differentiability.hpp"
#include "errors.hpp"
#include "eta_selection.hpp"
#include "geometry.hpp"
#include "lp.hpp"
#include "measure.hpp"
#include "network_simplex.hpp"
#include "objective.hpp"
#include "quantile.hpp"
#include "scalar.hpp"
#include "transport.hpp"
