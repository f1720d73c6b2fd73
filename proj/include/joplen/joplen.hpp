#pragma once

#include <joplen/dataset.hpp>
#include <joplen/metrics.hpp>
#include <joplen/model.hpp>
#include <joplen/objective.hpp>
#include <joplen/partition.hpp>
#include <joplen/prox.hpp>
#include <joplen/rng.hpp>
#include <joplen/solver.hpp>
#include <joplen/types.hpp>
