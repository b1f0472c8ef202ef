#pragma once

// Umbrella header.
#include "zskl/common.hpp"
#include "zskl/data.hpp"
#include "zskl/eval.hpp"
#include "zskl/kernels.hpp"
#include "zskl/model.hpp"
#include "zskl/modelselect.hpp"
#include "zskl/objective.hpp"
#include "zskl/optimizer.hpp"
#include "zskl/parallel.hpp"
