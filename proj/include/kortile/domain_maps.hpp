// SPDX-License-Identifier: MIT
#pragma once

#include "kortile/darboux.hpp"
#include "kortile/defining_function.hpp"
