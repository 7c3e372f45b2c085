// tests/test_inn.cc

#include <doctest.h>

TEST_SUITE("inn") {}
