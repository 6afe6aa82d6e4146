#pragma once

// Umbrella header for the TransFall transfer-learning library.

#include "transfall/data.hpp"
#include "transfall/harness.hpp"
#include "transfall/kernel.hpp"
#include "transfall/kmm.hpp"
#include "transfall/label_transfer.hpp"
#include "transfall/model_generation.hpp"
#include "transfall/types.hpp"
#include "transfall/vertical.hpp"
