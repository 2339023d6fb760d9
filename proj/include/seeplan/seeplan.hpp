#pragma once

#include "seeplan/error.hpp"
#include "seeplan/experiment.hpp"
#include "seeplan/mdp.hpp"
#include "seeplan/model.hpp"
#include "seeplan/planners.hpp"
#include "seeplan/policy_io.hpp"
#include "seeplan/sim.hpp"
