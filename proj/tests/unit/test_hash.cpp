#include <catch_amalgamated.hpp>

#include "twp/hash.hpp"

TEST_CASE("fnv1a64 known vectors", "[hash]") {
  CHECK(twp::fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(twp::fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
}
