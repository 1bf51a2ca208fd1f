#pragma once

#include "hgda/autodiff.hpp"
#include "hgda/checkpoint.hpp"
#include "hgda/graph.hpp"
#include "hgda/graph_io.hpp"
#include "hgda/homophily.hpp"
#include "hgda/losses.hpp"
#include "hgda/model.hpp"
#include "hgda/optim.hpp"
#include "hgda/rng.hpp"
#include "hgda/stats.hpp"
#include "hgda/synthgen.hpp"
#include "hgda/trainer.hpp"
