#pragma once

#include "termite_nav/corridor.hpp"
#include "termite_nav/error.hpp"
#include "termite_nav/geometry.hpp"
#include "termite_nav/global_planner.hpp"
#include "termite_nav/local_planner.hpp"
#include "termite_nav/matrix.hpp"
#include "termite_nav/nest_map.hpp"
#include "termite_nav/render.hpp"
#include "termite_nav/sim.hpp"
#include "termite_nav/swarm.hpp"
#include "termite_nav/terrain.hpp"
