// tests/test_pipeline.cc

#include <doctest.h>

TEST_SUITE("pipeline") {}
