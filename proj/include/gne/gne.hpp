#pragma once

#include "gne/linalg.hpp"
#include "gne/profile.hpp"
#include "gne/random.hpp"
#include "gne/feasible_set.hpp"
#include "gne/games.hpp"
#include "gne/game_json.hpp"
#include "gne/regret.hpp"
#include "gne/solvers.hpp"
#include "gne/version.hpp"
