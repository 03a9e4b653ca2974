#pragma once

#include "replicator4/boundary.hpp"
#include "replicator4/dynamics.hpp"
#include "replicator4/errors.hpp"
#include "replicator4/kernelgeom.hpp"
#include "replicator4/orbit.hpp"
#include "replicator4/payoff.hpp"
#include "replicator4/report.hpp"
#include "replicator4/scalar.hpp"
#include "replicator4/signgraph.hpp"
#include "replicator4/svg.hpp"
