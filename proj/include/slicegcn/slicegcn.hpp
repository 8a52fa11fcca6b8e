#pragma once

#include "slicegcn/dataset_io.hpp"
#include "slicegcn/engine.hpp"
#include "slicegcn/error.hpp"
#include "slicegcn/fusion.hpp"
#include "slicegcn/graph.hpp"
#include "slicegcn/layers.hpp"
#include "slicegcn/logging.hpp"
#include "slicegcn/matrix.hpp"
#include "slicegcn/metrics.hpp"
#include "slicegcn/model_shape.hpp"
#include "slicegcn/optim.hpp"
#include "slicegcn/report.hpp"
#include "slicegcn/rng.hpp"
#include "slicegcn/slicing.hpp"
#include "slicegcn/synth.hpp"
#include "slicegcn/worker_pool.hpp"
