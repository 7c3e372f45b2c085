// tests/test_autodiff.cc

#include <doctest.h>

TEST_SUITE("autodiff") {}
