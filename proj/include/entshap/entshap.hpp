#pragma once

// Umbrella header: information-theoretic Shapley attribution of predictive
// uncertainty, exact discrete oracles, analytic Gaussian baselines, in-repo
// forest models, conditional samplers, split-conformal bands, and the
// experiment harnesses built on top of them.

#include "entshap/axioms.hpp"
#include "entshap/boosted.hpp"
#include "entshap/coalition.hpp"
#include "entshap/conformal.hpp"
#include "entshap/dataset.hpp"
#include "entshap/error.hpp"
#include "entshap/forest.hpp"
#include "entshap/games.hpp"
#include "entshap/gaussian_model.hpp"
#include "entshap/hetero.hpp"
#include "entshap/info.hpp"
#include "entshap/io.hpp"
#include "entshap/metrics.hpp"
#include "entshap/oracle.hpp"
#include "entshap/parallel.hpp"
#include "entshap/predictor.hpp"
#include "entshap/prob_table.hpp"
#include "entshap/rng.hpp"
#include "entshap/samplers.hpp"
#include "entshap/shapley.hpp"
#include "entshap/svg.hpp"
#include "entshap/verify.hpp"

#include "entshap/experiments/coverage.hpp"
#include "entshap/experiments/friedman.hpp"
#include "entshap/experiments/gauss_convergence.hpp"
#include "entshap/experiments/missingness.hpp"
#include "entshap/experiments/result.hpp"
#include "entshap/experiments/selection.hpp"
#include "entshap/experiments/shift.hpp"
