#pragma once

#include "diffwass/transport/circle.hpp"
#include "diffwass/transport/duality.hpp"
#include "diffwass/transport/fourier_bound.hpp"
#include "diffwass/transport/lp.hpp"
#include "diffwass/transport/result.hpp"
#include "diffwass/transport/sinkhorn.hpp"
