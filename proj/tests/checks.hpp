#pragma once
#include <cmath>
#include "doctest.h"

// absolute-tolerance comparison; doctest's Approx is relative-only
#define CHECK_NEAR(a, b, tol) CHECK(std::abs((a) - (b)) <= (tol))
