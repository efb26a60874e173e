#pragma once

#include "lapcert/builtin_models.hpp"
#include "lapcert/errors.hpp"
#include "lapcert/finite_difference.hpp"
#include "lapcert/gaussian_core.hpp"
#include "lapcert/hellinger_metrics.hpp"
#include "lapcert/inverse_problem.hpp"
#include "lapcert/map_laplace.hpp"
#include "lapcert/problem_io.hpp"
#include "lapcert/quadrature.hpp"
#include "lapcert/random.hpp"
#include "lapcert/study.hpp"
