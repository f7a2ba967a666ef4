#pragma once

#include "anodet/agent.hpp"
#include "anodet/belief.hpp"
#include "anodet/checkpoint.hpp"
#include "anodet/config.hpp"
#include "anodet/env.hpp"
#include "anodet/experiment.hpp"
#include "anodet/mlp.hpp"
#include "anodet/rng.hpp"
#include "anodet/types.hpp"
