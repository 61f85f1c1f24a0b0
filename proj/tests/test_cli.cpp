#include <doctest.h>

#include "lasround/common.hpp"

TEST_CASE("placeholder") { CHECK(true); }
