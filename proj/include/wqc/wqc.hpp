#pragma once

#include "wqc/errors.hpp"
#include "wqc/units.hpp"
#include "wqc/network/network.hpp"
#include "wqc/network/incidence.hpp"
#include "wqc/network/hydraulics.hpp"
#include "wqc/quality/discretization.hpp"
#include "wqc/quality/assembly.hpp"
#include "wqc/quality/simulate.hpp"
#include "wqc/quality/export.hpp"
#include "wqc/mpc/prediction.hpp"
#include "wqc/mpc/law.hpp"
#include "wqc/mpc/qp.hpp"
#include "wqc/mpc/controller.hpp"
#include "wqc/mpc/accounting.hpp"
#include "wqc/harness/scenario.hpp"
#include "wqc/harness/rbc.hpp"
#include "wqc/harness/uncertainty.hpp"
#include "wqc/harness/closed_loop.hpp"
#include "wqc/harness/report.hpp"
