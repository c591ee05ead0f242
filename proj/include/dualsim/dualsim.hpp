#pragma once

#include "dualsim/error.hpp"
#include "dualsim/random.hpp"
#include "dualsim/core.hpp"
#include "dualsim/rate_expr.hpp"
#include "dualsim/expr_parser.hpp"
#include "dualsim/ode.hpp"
#include "dualsim/model.hpp"
#include "dualsim/abm.hpp"
#include "dualsim/stats.hpp"
#include "dualsim/models.hpp"
#include "dualsim/experiments.hpp"
#include "dualsim/io.hpp"
#include "dualsim/config.hpp"
