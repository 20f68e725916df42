#pragma once

#include "hnorm/model.hpp"
#include "hnorm/moments.hpp"
#include "hnorm/distributions.hpp"
#include "hnorm/estimator.hpp"
#include "hnorm/identities.hpp"
#include "hnorm/quadrature.hpp"
#include "hnorm/criterion.hpp"
#include "hnorm/decision.hpp"
#include "hnorm/fit_quality.hpp"
#include "hnorm/noise.hpp"
#include "hnorm/simulator.hpp"
