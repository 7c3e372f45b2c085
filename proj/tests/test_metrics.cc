// tests/test_metrics.cc

#include <doctest.h>

TEST_SUITE("metrics") {}
