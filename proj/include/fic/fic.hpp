#pragma once

// Umbrella header: focused model selection and frequentist model averaging
// for linear regression with protected and uncertain covariates, the
// local-asymptotics limit experiment, stepwise order estimation, and
// second-order risk corrections.

#include "fic/common.hpp"
#include "fic/config.hpp"
#include "fic/criteria.hpp"
#include "fic/dataset.hpp"
#include "fic/fit.hpp"
#include "fic/focus.hpp"
#include "fic/limit.hpp"
#include "fic/linalg.hpp"
#include "fic/moments.hpp"
#include "fic/order.hpp"
#include "fic/parallel.hpp"
#include "fic/report.hpp"
#include "fic/rng.hpp"
#include "fic/runner.hpp"
#include "fic/second_order.hpp"
#include "fic/stats.hpp"
#include "fic/subset.hpp"
