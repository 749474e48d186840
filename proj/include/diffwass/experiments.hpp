#pragma once

#include "diffwass/experiments/config.hpp"
#include "diffwass/experiments/record.hpp"
#include "diffwass/experiments/report.hpp"
#include "diffwass/experiments/runner.hpp"
