#pragma once

#include "ecsim/errors.hpp"
#include "ecsim/coherent_algebra.hpp"
#include "ecsim/optics.hpp"
#include "ecsim/family.hpp"
#include "ecsim/detection.hpp"
#include "ecsim/support.hpp"
#include "ecsim/fisher.hpp"
#include "ecsim/optimize.hpp"
#include "ecsim/scheme.hpp"
#include "ecsim/manifest.hpp"
