#pragma once

#include "analytics.hpp"
#include "dist.hpp"
#include "energy.hpp"
#include "errors.hpp"
#include "optimize.hpp"
#include "policy.hpp"
#include "simulator.hpp"
