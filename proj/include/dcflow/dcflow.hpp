#ifndef DCFLOW_DCFLOW_HPP_
#define DCFLOW_DCFLOW_HPP_

#include "dcflow/builtin_cases.hpp"
#include "dcflow/caseio.hpp"
#include "dcflow/cone_program.hpp"
#include "dcflow/cone_solver.hpp"
#include "dcflow/error.hpp"
#include "dcflow/exactness.hpp"
#include "dcflow/formulations.hpp"
#include "dcflow/netmodel.hpp"
#include "dcflow/oracle.hpp"
#include "dcflow/pipeline.hpp"
#include "dcflow/presolve.hpp"
#include "dcflow/random_cases.hpp"
#include "dcflow/recovery.hpp"
#include "dcflow/report.hpp"
#include "dcflow/solutions.hpp"

#endif  // DCFLOW_DCFLOW_HPP_
