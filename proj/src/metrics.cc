// src/metrics.cc

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

#include "wake/metrics.hh"

#include <cmath>
#include <cstdio>
#include <limits>
#include <map>

namespace wake {

double snr_db(const AudioClip& x, const AudioClip& y) {
  if (x.size() != y.size())
    throw std::invalid_argument("snr: length mismatch " + std::to_string(x.size()) + " vs " +
                                std::to_string(y.size()));
  double px = 0, pn = 0;
  for (int64_t i = 0; i < x.size(); i++) {
    double xs = x.samples[i];
    double d = xs - static_cast<double>(y.samples[i]);
    px += xs * xs;
    pn += d * d;
  }
  if (px == 0) throw std::invalid_argument("snr: all-zero reference signal");
  if (pn == 0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(px / pn);
}

double spectral_distance(const AudioClip& x, const AudioClip& y) {
  if (x.size() != y.size()) throw std::invalid_argument("spectral_distance: length mismatch");
  std::vector<float> ones(x.size(), 1.0f);
  return multiscale_mel_loss(x, y, ones, MelScaleConfig{});
}

namespace {

std::string scenario_name(int n) {
  if (n == 1) return "single";
  if (n == 2) return "double";
  return std::to_string(n) + "-fold";
}

struct Agg {
  std::vector<double> ber_reps;  // one mean per repetition
  std::vector<double> snr_reps;
  std::vector<double> spec_reps;
  int trials = 0;
};

std::pair<double, double> mean_std(const std::vector<double>& v) {
  if (v.empty()) return {0, 0};
  double m = 0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double s2 = 0;
  for (double x : v) s2 += (x - m) * (x - m);
  return {m, std::sqrt(s2 / static_cast<double>(v.size()))};
}

std::string fmt(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

std::string MetricsReport::to_csv() const {
  std::string out =
      "scenario,j,i,attack,ber_mean,ber_std,snr_mean,snr_std,specdist_mean,trials\n";
  for (const MetricsRow& r : rows) {
    out += r.scenario + "," + std::to_string(r.embed_index) + "," + std::to_string(r.key_index) +
           "," + r.attack + "," + fmt(r.ber_mean) + "," + fmt(r.ber_std) + "," +
           fmt(r.snr_mean) + "," + fmt(r.snr_std) + "," + fmt(r.specdist_mean) + "," +
           std::to_string(r.trials) + "\n";
  }
  return out;
}

MetricsReport evaluate(const ModelParamsF& model, const std::vector<AudioClip>& clips,
                       const std::vector<int>& scenarios, const std::vector<AttackOp>& attacks,
                       int reps, Rng& rng, RedundancySource source) {
  if (clips.empty()) throw std::invalid_argument("evaluate: no clips");
  if (reps < 1) throw std::invalid_argument("evaluate: need at least one repetition");
  const int key_len = model.shape.key_bits;
  const int payload = model.shape.payload_bits;

  MetricsReport report;
  for (int n : scenarios) {
    int wrong_index = std::max(n + 1, 3);
    for (AttackOp op : attacks) {
      // (i, j) -> aggregation over repetitions
      std::map<std::pair<int, int>, Agg> cells;
      for (int rep = 0; rep < reps; rep++) {
        std::map<std::pair<int, int>, std::vector<double>> ber_clips;
        std::vector<double> snr_clips, spec_clips;
        for (const AudioClip& x : clips) {
          // unique watermarks and keys per trial
          WatermarkStack stack;
          std::set<KeyBits> used;
          std::set<WatermarkBits> used_wm;
          for (int j = 0; j < n; j++) {
            WatermarkBits wm = BitVec::random(payload, rng);
            while (used_wm.count(wm)) wm = BitVec::random(payload, rng);
            used_wm.insert(wm);
            KeyBits k = sample_key(key_len, rng, used);
            used.insert(k);
            stack.entries.emplace_back(wm, k);
          }
          AudioClip x_wm = embed_stack(x, stack, model);
          snr_clips.push_back(snr_db(x, x_wm));
          spec_clips.push_back(spectral_distance(x, x_wm));

          AttackConfig atk = default_attack(op, rng.next_u64());
          AudioClip x_e = apply_attack(x_wm, atk);

          KeyBits k_wrong = sample_key(key_len, rng, used);
          for (int i = 1; i <= n + 1; i++) {
            const KeyBits& key = i <= n ? stack.entries[i - 1].second : k_wrong;
            int row_i = i <= n ? i : wrong_index;
            DecodeResult dec = decode(x_e, key, model, source, rng.next_u64());
            for (int j = 1; j <= n; j++)
              ber_clips[{row_i, j}].push_back(ber(stack.entries[j - 1].first, dec.bits));
          }
        }
        auto [snr_m, snr_s] = mean_std(snr_clips);
        (void)snr_s;
        auto [spec_m, spec_s] = mean_std(spec_clips);
        (void)spec_s;
        for (auto& [ij, bers] : ber_clips) {
          Agg& a = cells[ij];
          a.ber_reps.push_back(mean_std(bers).first);
          a.snr_reps.push_back(snr_m);
          a.spec_reps.push_back(spec_m);
          a.trials += static_cast<int>(bers.size());
        }
      }
      for (auto& [ij, agg] : cells) {
        MetricsRow row;
        row.scenario = scenario_name(n);
        row.key_index = ij.first;
        row.embed_index = ij.second;
        row.attack = attack_op_name(op);
        std::tie(row.ber_mean, row.ber_std) = mean_std(agg.ber_reps);
        std::tie(row.snr_mean, row.snr_std) = mean_std(agg.snr_reps);
        row.specdist_mean = mean_std(agg.spec_reps).first;
        row.trials = agg.trials;
        report.rows.push_back(row);
      }
    }
  }
  return report;
}

EvalConfig eval_config_from(const ConfigFile& c) {
  EvalConfig e;
  e.checkpoint = c.get("eval", "checkpoint", e.checkpoint);
  e.clips_dir = c.get("eval", "clips_dir", e.clips_dir);
  e.holdout_tones = c.get_int("eval", "holdout_tones", e.holdout_tones);
  e.holdout_noise = c.get_int("eval", "holdout_noise", e.holdout_noise);
  e.holdout_am = c.get_int("eval", "holdout_am", e.holdout_am);
  e.corpus_seed =
      static_cast<uint64_t>(c.get_num("eval", "corpus_seed", static_cast<double>(e.corpus_seed)));
  if (c.has("eval", "scenarios")) {
    e.scenarios.clear();
    for (const auto& s : split_list(c.get("eval", "scenarios", ""))) {
      if (s == "single")
        e.scenarios.push_back(1);
      else if (s == "double")
        e.scenarios.push_back(2);
      else
        e.scenarios.push_back(std::stoi(s));
    }
  }
  if (c.has("eval", "attacks")) {
    e.attacks.clear();
    for (const auto& s : split_list(c.get("eval", "attacks", "")))
      e.attacks.push_back(attack_op_from_name(s));
  }
  e.reps = c.get_int("eval", "reps", e.reps);
  e.seed = static_cast<uint64_t>(c.get_num("eval", "seed", static_cast<double>(e.seed)));
  std::string red = c.get("eval", "redundancy", "predict");
  if (red == "predict")
    e.redundancy = RedundancySource::kPredict;
  else if (red == "gaussian")
    e.redundancy = RedundancySource::kGaussian;
  else
    throw std::runtime_error("config: redundancy must be predict or gaussian, got " + red);
  e.report_path = c.get("eval", "report", e.report_path);
  return e;
}

}  // namespace wake
