#pragma once

#include "logdp/errors.hpp"
#include "logdp/phi_core.hpp"
#include "logdp/fem_grid.hpp"
#include "logdp/modular_space.hpp"
#include "logdp/operator_energy.hpp"
#include "logdp/solvers.hpp"
#include "logdp/harness/expression.hpp"
#include "logdp/harness/config.hpp"
#include "logdp/harness/verify.hpp"
#include "logdp/harness/experiment.hpp"
#include "logdp/harness/report.hpp"
