// tests/test_codec.cc

#include <doctest.h>

TEST_SUITE("codec") {}
