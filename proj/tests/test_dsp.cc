// tests/test_dsp.cc

#include <doctest.h>

TEST_SUITE("dsp") {}
