#pragma once

#include "grid.hpp"
#include "scene.hpp"
#include "scene_gen.hpp"
#include "semantic_map.hpp"
#include "planner.hpp"
#include "frontier.hpp"
#include "advisors.hpp"
#include "advisor_http.hpp"
#include "mfnp.hpp"
#include "interfloor.hpp"
#include "config.hpp"
#include "debug_dump.hpp"
#include "runner.hpp"
