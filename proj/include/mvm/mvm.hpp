#pragma once

#include "mvm/baselines.hpp"
#include "mvm/data.hpp"
#include "mvm/dataset.hpp"
#include "mvm/errors.hpp"
#include "mvm/matrix.hpp"
#include "mvm/metrics.hpp"
#include "mvm/model.hpp"
#include "mvm/objectives.hpp"
#include "mvm/schema.hpp"
#include "mvm/tensor_core.hpp"
#include "mvm/training.hpp"
