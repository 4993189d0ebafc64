#pragma once

#include "raypos/aoa.hpp"
#include "raypos/demo_scene.hpp"
#include "raypos/errors.hpp"
#include "raypos/estimator.hpp"
#include "raypos/eval.hpp"
#include "raypos/geometry.hpp"
#include "raypos/parallel.hpp"
#include "raypos/ray_engine.hpp"
#include "raypos/rng.hpp"
#include "raypos/scene.hpp"
