#pragma once

// Umbrella header for the gsdtail library.

#include "gsdtail/asymptotics.hpp"
#include "gsdtail/errors.hpp"
#include "gsdtail/experiments.hpp"
#include "gsdtail/model.hpp"
#include "gsdtail/qp.hpp"
#include "gsdtail/quadrature.hpp"
#include "gsdtail/radial.hpp"
#include "gsdtail/rng.hpp"
#include "gsdtail/sampler.hpp"
#include "gsdtail/serialize.hpp"
#include "gsdtail/special.hpp"
