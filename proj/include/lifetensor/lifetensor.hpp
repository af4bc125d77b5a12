#pragma once

// Umbrella header for the lifetensor library.

#include "lifetensor/analysis.hpp"
#include "lifetensor/corcondia.hpp"
#include "lifetensor/cp_model.hpp"
#include "lifetensor/dataset.hpp"
#include "lifetensor/featurize.hpp"
#include "lifetensor/featurize_io.hpp"
#include "lifetensor/fit_restarts.hpp"
#include "lifetensor/fms.hpp"
#include "lifetensor/hals.hpp"
#include "lifetensor/kde.hpp"
#include "lifetensor/model_io.hpp"
#include "lifetensor/rank_scan.hpp"
#include "lifetensor/report_io.hpp"
#include "lifetensor/special.hpp"
#include "lifetensor/stats.hpp"
#include "lifetensor/synthetic.hpp"
#include "lifetensor/tensor.hpp"
#include "lifetensor/tensor_io.hpp"
