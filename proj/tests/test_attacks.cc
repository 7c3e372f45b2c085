// tests/test_attacks.cc

#include <doctest.h>

TEST_SUITE("attacks") {}
