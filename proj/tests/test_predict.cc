// tests/test_predict.cc

#include <doctest.h>

TEST_SUITE("predict") {}
