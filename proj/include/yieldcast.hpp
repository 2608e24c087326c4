#pragma once

#include "yieldcast/core_data.hpp"
#include "yieldcast/error.hpp"
#include "yieldcast/eval.hpp"
#include "yieldcast/explore.hpp"
#include "yieldcast/ingest.hpp"
#include "yieldcast/knn.hpp"
#include "yieldcast/linear.hpp"
#include "yieldcast/metrics.hpp"
#include "yieldcast/model.hpp"
#include "yieldcast/persist.hpp"
#include "yieldcast/report.hpp"
#include "yieldcast/tree.hpp"
