#pragma once

#include "objdyn/config.hpp"
#include "objdyn/controller.hpp"
#include "objdyn/core.hpp"
#include "objdyn/inference.hpp"
#include "objdyn/io.hpp"
#include "objdyn/pareto.hpp"
#include "objdyn/rng.hpp"
#include "objdyn/scorer.hpp"
#include "objdyn/simulator.hpp"
#include "objdyn/spectral.hpp"
