#pragma once

#include "odflow/analysis.hpp"
#include "odflow/autodiff.hpp"
#include "odflow/bpr.hpp"
#include "odflow/dataset_io.hpp"
#include "odflow/errors.hpp"
#include "odflow/frank_wolfe.hpp"
#include "odflow/gcnn.hpp"
#include "odflow/graph_matrices.hpp"
#include "odflow/matrix.hpp"
#include "odflow/network.hpp"
#include "odflow/numio.hpp"
#include "odflow/optim.hpp"
#include "odflow/rng.hpp"
#include "odflow/scenario.hpp"
#include "odflow/shortest_path.hpp"
#include "odflow/tntp.hpp"
#include "odflow/train.hpp"
