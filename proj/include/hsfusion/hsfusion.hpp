#pragma once

#include "hsfusion/chain_model.hpp"
#include "hsfusion/chain_sampler.hpp"
#include "hsfusion/distributions.hpp"
#include "hsfusion/errors.hpp"
#include "hsfusion/graph_fusion.hpp"
#include "hsfusion/ingest.hpp"
#include "hsfusion/recovery.hpp"
#include "hsfusion/simulate.hpp"
