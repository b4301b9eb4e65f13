#pragma once

#include "fiberlab/actions.hpp"
#include "fiberlab/bits.hpp"
#include "fiberlab/complexity.hpp"
#include "fiberlab/driving.hpp"
#include "fiberlab/errors.hpp"
#include "fiberlab/fiber.hpp"
#include "fiberlab/probability.hpp"
#include "fiberlab/random.hpp"
#include "fiberlab/symbolic.hpp"
