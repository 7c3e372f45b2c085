// include/wake/metrics.hh

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

#ifndef WAKE_METRICS_HH
#define WAKE_METRICS_HH

#include <optional>
#include <string>
#include <vector>

#include "wake/attacks.hh"
#include "wake/pipeline.hh"
#include "wake/trainer.hh"

namespace wake {

// 10 log10(sum x^2 / sum (x-y)^2); +infinity when y == x exactly
double snr_db(const AudioClip& x, const AudioClip& y);

// PESQ stand-in: unweighted multi-scale Mel distance (reported as "specdist")
double spectral_distance(const AudioClip& x, const AudioClip& y);

struct MetricsRow {
  std::string scenario;  // "single", "double", "3-fold", ...
  int embed_index;       // j: which embedded payload the BER compares against
  int key_index;         // i: which key decoded (wrong key: max(n+1, 3))
  std::string attack;
  double ber_mean = 0, ber_std = 0;
  double snr_mean = 0, snr_std = 0;
  double specdist_mean = 0;
  int trials = 0;
};

struct MetricsReport {
  std::vector<MetricsRow> rows;
  std::string to_csv() const;
};

// Embeds per scenario (n watermarks under n distinct keys), applies each
// attack, decodes with every stack key plus one fresh wrong key, and
// aggregates mean/std over `reps` seeded repetitions of the whole clip list.
MetricsReport evaluate(const ModelParamsF& model, const std::vector<AudioClip>& clips,
                       const std::vector<int>& scenarios, const std::vector<AttackOp>& attacks,
                       int reps, Rng& rng,
                       RedundancySource source = RedundancySource::kPredict);

struct EvalConfig {
  std::string checkpoint;
  std::string clips_dir;  // WAV directory; empty -> generated held-out corpus
  int holdout_tones = 20, holdout_noise = 15, holdout_am = 15;
  uint64_t corpus_seed = 99;
  std::vector<int> scenarios = {1, 2};
  std::vector<AttackOp> attacks = {AttackOp::NA};
  int reps = 5;
  uint64_t seed = 1;
  RedundancySource redundancy = RedundancySource::kPredict;
  std::string report_path = "report.csv";
};

EvalConfig eval_config_from(const ConfigFile& cfg);

}  // namespace wake

#endif  // WAKE_METRICS_HH
