#pragma once

#include <trackuq/bayes.hpp>
#include <trackuq/costs.hpp>
#include <trackuq/dbmc.hpp>
#include <trackuq/errors.hpp>
#include <trackuq/eval.hpp>
#include <trackuq/experiment.hpp>
#include <trackuq/io.hpp>
#include <trackuq/lap.hpp>
#include <trackuq/model.hpp>
#include <trackuq/perturb.hpp>
#include <trackuq/solver.hpp>
