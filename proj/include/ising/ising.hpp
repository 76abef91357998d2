#pragma once

#include "ising/annealing.hpp"
#include "ising/brute_force.hpp"
#include "ising/errors.hpp"
#include "ising/glauber.hpp"
#include "ising/hs_grid.hpp"
#include "ising/math.hpp"
#include "ising/model.hpp"
#include "ising/models.hpp"
#include "ising/parallel.hpp"
#include "ising/rng.hpp"
#include "ising/spectral.hpp"
#include "ising/tempering.hpp"
#include "ising/tilt.hpp"
