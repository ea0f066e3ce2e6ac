#pragma once

#include "anisolab/config.hpp"
#include "anisolab/core.hpp"
#include "anisolab/flowdecomp.hpp"
#include "anisolab/generators.hpp"
#include "anisolab/grid_io.hpp"
#include "anisolab/integrand.hpp"
#include "anisolab/mesh_io.hpp"
#include "anisolab/normalize.hpp"
#include "anisolab/pipelines.hpp"
#include "anisolab/planefield.hpp"
#include "anisolab/varifold.hpp"
