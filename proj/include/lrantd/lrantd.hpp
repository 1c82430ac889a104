#pragma once

#include "lrantd/tensor.hpp"
#include "lrantd/multilinear.hpp"
#include "lrantd/tucker.hpp"
#include "lrantd/lra.hpp"
#include "lrantd/config.hpp"
#include "lrantd/gradients.hpp"
#include "lrantd/updates.hpp"
#include "lrantd/solver.hpp"
#include "lrantd/eval.hpp"
#include "lrantd/report.hpp"
#include "lrantd/io.hpp"
