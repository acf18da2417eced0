#ifndef EVODISPATCH_HPP
#define EVODISPATCH_HPP

#include "evodispatch/assign.hpp"
#include "evodispatch/dispatch.hpp"
#include "evodispatch/evolve.hpp"
#include "evodispatch/generator.hpp"
#include "evodispatch/metrics.hpp"
#include "evodispatch/network.hpp"
#include "evodispatch/objective.hpp"
#include "evodispatch/oracle.hpp"
#include "evodispatch/rng.hpp"
#include "evodispatch/sequence.hpp"
#include "evodispatch/simulator.hpp"
#include "evodispatch/text.hpp"

#endif  // EVODISPATCH_HPP
