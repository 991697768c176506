#pragma once

#include "ssvdd/data_io.hpp"
#include "ssvdd/error.hpp"
#include "ssvdd/eval.hpp"
#include "ssvdd/kernel_npt.hpp"
#include "ssvdd/metrics.hpp"
#include "ssvdd/model.hpp"
#include "ssvdd/model_store.hpp"
#include "ssvdd/numerics.hpp"
#include "ssvdd/subspace.hpp"
#include "ssvdd/svdd.hpp"
