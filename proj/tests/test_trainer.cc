// tests/test_trainer.cc

#include <doctest.h>

TEST_SUITE("trainer") {}
