#pragma once

#include "mfg/catalog/catalog.hpp"
#include "mfg/core/errors.hpp"
#include "mfg/core/fields.hpp"
#include "mfg/core/generator.hpp"
#include "mfg/core/grid.hpp"
#include "mfg/core/interpolate.hpp"
#include "mfg/core/problem.hpp"
#include "mfg/core/types.hpp"
#include "mfg/cost/cost.hpp"
#include "mfg/fp/fp_solver.hpp"
#include "mfg/hamiltonian/assumptions.hpp"
#include "mfg/hamiltonian/hamiltonian.hpp"
#include "mfg/hjb/hjb_solver.hpp"
#include "mfg/io/checkpoint.hpp"
#include "mfg/io/config.hpp"
#include "mfg/io/csv.hpp"
#include "mfg/io/run.hpp"
#include "mfg/measure/density.hpp"
#include "mfg/measure/regularity.hpp"
#include "mfg/measure/transport_lp.hpp"
#include "mfg/measure/wasserstein.hpp"
#include "mfg/oracle/heat.hpp"
#include "mfg/oracle/hopf_cole.hpp"
#include "mfg/oracle/riccati.hpp"
#include "mfg/particle/particle.hpp"
#include "mfg/solver/apply_phi.hpp"
#include "mfg/solver/mfg_solver.hpp"
#include "mfg/solver/pde_residual.hpp"
#include "mfg/util/parallel.hpp"
#include "mfg/util/philox.hpp"
#include "mfg/util/tridiagonal.hpp"
