#pragma once

#include "baselines.hpp"
#include "crossval.hpp"
#include "datamodel.hpp"
#include "estimator.hpp"
#include "harness.hpp"
#include "isotonic.hpp"
#include "poset.hpp"
#include "poset_io.hpp"
#include "qp_oracle.hpp"
#include "rng.hpp"
#include "small_qp.hpp"
#include "types.hpp"
