// tests/test_losses.cc

#include <doctest.h>

TEST_SUITE("losses") {}
