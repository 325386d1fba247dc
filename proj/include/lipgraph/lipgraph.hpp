#pragma once

#include "lipgraph/error.hpp"
#include "lipgraph/graph.hpp"
#include "lipgraph/harness/algorithms.hpp"
#include "lipgraph/harness/emd.hpp"
#include "lipgraph/harness/oracles.hpp"
#include "lipgraph/harness/sampling.hpp"
#include "lipgraph/harness/stability.hpp"
#include "lipgraph/instance_io.hpp"
#include "lipgraph/matching.hpp"
#include "lipgraph/min_cut.hpp"
#include "lipgraph/pip.hpp"
#include "lipgraph/prox/constraint_set.hpp"
#include "lipgraph/prox/solver.hpp"
#include "lipgraph/prox/split_solver.hpp"
#include "lipgraph/random_tape.hpp"
