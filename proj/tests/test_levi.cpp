#include "checks.hpp"
TEST_CASE("pending"){CHECK(true);}
