#pragma once

#include "chunkswarm/analysis.hpp"
#include "chunkswarm/chunkset.hpp"
#include "chunkswarm/io.hpp"
#include "chunkswarm/rational.hpp"
#include "chunkswarm/rules.hpp"
#include "chunkswarm/sim.hpp"
#include "chunkswarm/state_sampler.hpp"
#include "chunkswarm/swarm_state.hpp"
#include "chunkswarm/verify.hpp"
