// include/wake/selftest.hh

// Copyright 2026  WAKE contributors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef WAKE_SELFTEST_HH
#define WAKE_SELFTEST_HH

#include <cstdint>

#include "wake/pipeline.hh"

namespace wake::selftest {

// Max-abs reconstruction error of inn_backward(inn_forward(x, w, k)) over
// `draws` random parameter draws x `key_count` keys (0 -> all 2^N keys) on
// random (2, f, t) inputs, with randomized (non-identity) subnets.
double inn_roundtrip_max_err(int draws, int key_count, int n_blocks, int growth, int f, int t,
                             uint64_t seed);

// For every key and every block with a zero key bit, checks the x-channel is
// bit-identical through that block; returns false on any violation.
bool key_gating_exact(int n_blocks, int growth, int f, int t, uint64_t seed);

// Max-abs error of istft(stft(x)) - x over `n_clips` random 1 s clips.
double stft_roundtrip_max_err(int n_clips, uint64_t seed);

// Worst relative finite-difference error across the registered primitives,
// each checked at `points` random points.
double primitive_gradcheck_worst(int points, uint64_t seed);

// Worst relative FD error through a 2-block INN composition (scalar loss over
// both outputs, gradients w.r.t. every subnet parameter).
double inn_gradcheck_worst(int f, int t, int growth, uint64_t seed);

}  // namespace wake::selftest

#endif  // WAKE_SELFTEST_HH
