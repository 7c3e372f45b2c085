// include/wake/trainer.hh

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

#ifndef WAKE_TRAINER_HH
#define WAKE_TRAINER_HH

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "wake/attacks.hh"
#include "wake/config.hh"
#include "wake/pipeline.hh"

namespace wake {

// named views over every learnable tensor, used by the optimizer and the
// checkpoint container
struct ParamRef {
  std::string name;
  TensorF* tensor;
};

std::vector<ParamRef> collect_generator_params(ModelParamsF& m);
std::vector<ParamRef> collect_disc_params(ModelParamsF& m);
std::vector<ParamRef> collect_all_params(ModelParamsF& m);

struct TrainConfig {
  LossWeights weights;
  ModelShape shape;
  int steps = 2000;
  int batch = 4;
  float lr_gen = 1e-4f;
  float lr_disc = 1e-4f;
  uint64_t seed = 1;
  double p_single = 0.5;   // probability of a single-watermark step
  double clean_prob = 0.1; // probability a step decodes without editing
  std::vector<AttackOp> attack_menu = {AttackOp::UD, AttackOp::RN, AttackOp::PN, AttackOp::LF,
                                       AttackOp::HF, AttackOp::BF, AttackOp::BA, AttackOp::DA,
                                       AttackOp::SA};
  int corpus_tones = 100, corpus_noise = 50, corpus_am = 50;
  std::string corpus_wav_dir;
  int checkpoint_every = 0;  // 0: only the final checkpoint
  std::string checkpoint_path;
  int log_every = 0;  // 0: silent
};

TrainConfig train_config_from(const ConfigFile& cfg);
std::string train_config_to_text(const TrainConfig& cfg);

struct CorpusSpec {
  int tones = 100, noise = 50, am = 50;
  std::string wav_dir;
  int clip_len = kClipLen;
};

// synthetic desk-scale corpus: harmonic tone clips, filtered-noise clips and
// AM-modulated clips, peak amplitude <= 0.8, plus optional WAV ingestion
std::vector<AudioClip> toy_corpus(const CorpusSpec& spec, Rng& rng);

struct Adam {
  float lr = 1e-4f, beta1 = 0.9f, beta2 = 0.999f, eps = 1e-8f;
  int64_t t = 0;
  std::vector<TensorF> m, v;

  void init(const std::vector<ParamRef>& params);
  void step(const std::vector<ParamRef>& params, const std::vector<TensorF>& grads);
};

// per-step scalar diagnostics; `total` always equals the weighted
// recomposition of the logged terms
struct StepLosses {
  int strategy = 1;  // 1 or 2 watermarks
  double l_p = 0, l_a = 0, total = 0, d_loss = 0;
  double bce_correct = 0, bce_wrong = 0;
  AttackOp attack = AttackOp::NA;
};

struct Checkpoint {
  uint32_t version = 1;
  uint64_t step = 0;
  std::string rng_state;
  std::string config_text;
  ModelParamsF model;
  std::vector<std::pair<std::string, TensorF>> opt_state;
};

void save_checkpoint(const Checkpoint& ck, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

class Trainer {
 public:
  Trainer(const TrainConfig& cfg, std::vector<AudioClip> corpus);
  // resume from a checkpoint (restores parameters, optimizer state, RNG)
  Trainer(const TrainConfig& cfg, std::vector<AudioClip> corpus, const Checkpoint& ck);

  StepLosses step();
  Checkpoint run(const std::function<void(int, const StepLosses&)>& on_log = nullptr);
  Checkpoint make_checkpoint() const;

  ModelParamsF& model() { return model_; }
  const TrainConfig& config() const { return cfg_; }
  int64_t step_count() const { return step_; }

  // graph builders shared with tests; losses accumulate into `out`, gradients
  // into `grads`, and the watermarked clip (discriminator food) into `fake`
  void accumulate_single(const AudioClip& x, int clip_index, const WatermarkBits& wm,
                         const KeyBits& key, const AttackConfig& attack, StepLosses& out,
                         std::vector<TensorF>& grads, std::vector<float>* fake = nullptr);
  void accumulate_double(const AudioClip& x, int clip_index, const WatermarkBits& wm1,
                         const KeyBits& k1, const WatermarkBits& wm2, const KeyBits& k2,
                         const AttackConfig& attack, StepLosses& out,
                         std::vector<TensorF>& grads, std::vector<float>* fake = nullptr);

 private:
  struct ClipCache {
    bool ready = false;
    TensorF spec;                // stft of the clean clip (discriminator input)
    std::vector<TensorF> mels;   // per-scale mel spectra of x (*) W
  };

  void init_params();
  const ClipCache& cache_for(int clip_index);
  double disc_step(const std::vector<std::pair<int, std::vector<float>>>& fakes);
  void check_finite(const char* what) const;

  TrainConfig cfg_;
  std::vector<AudioClip> corpus_;
  ModelParamsF model_;
  Rng rng_;
  int64_t step_ = 0;
  Adam opt_gen_, opt_disc_;
  std::vector<float> broadweight_;
  MelScaleConfig mel_cfg_;
  std::vector<ClipCache> cache_;
};

}  // namespace wake

#endif  // WAKE_TRAINER_HH
