#pragma once

#include "flipplan/assign.hpp"
#include "flipplan/coverage.hpp"
#include "flipplan/error.hpp"
#include "flipplan/exec.hpp"
#include "flipplan/geom.hpp"
#include "flipplan/intervals.hpp"
#include "flipplan/io.hpp"
#include "flipplan/model.hpp"
#include "flipplan/plan.hpp"
#include "flipplan/random.hpp"
#include "flipplan/scene.hpp"
