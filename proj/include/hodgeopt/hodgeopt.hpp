/**
 * Umbrella header.
 */
#pragma once

#include "hodgeopt/boundary.hpp"
#include "hodgeopt/complex.hpp"
#include "hodgeopt/decomposition.hpp"
#include "hodgeopt/diagnostics.hpp"
#include "hodgeopt/flow.hpp"
#include "hodgeopt/io.hpp"
#include "hodgeopt/laplacian.hpp"
#include "hodgeopt/optimizer.hpp"
#include "hodgeopt/pipeline.hpp"
#include "hodgeopt/random.hpp"
#include "hodgeopt/sdp.hpp"
#include "hodgeopt/vietoris_rips.hpp"
#include "hodgeopt/weights.hpp"
