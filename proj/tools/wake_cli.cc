// tools/wake_cli.cc

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

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "wake/metrics.hh"
#include "wake/selftest.hh"
#include "wake/trainer.hh"

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitValidation = 2;

void require_file(const std::string& path) {
  if (!std::filesystem::exists(path))
    throw std::invalid_argument("file does not exist: " + path);
}

wake::ModelParamsF load_model(const std::string& ckpt_path) {
  require_file(ckpt_path);
  return wake::load_checkpoint(ckpt_path).model;
}

void dump_spec(const wake::Spectrogram& spec, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  const wake::TensorF& d = spec.data;
  f << "wake-spec " << d.dim(0) << " " << d.dim(1) << " " << d.dim(2) << "\n";
  for (int c = 0; c < d.dim(0); c++)
    for (int i = 0; i < d.dim(1); i++) {
      for (int j = 0; j < d.dim(2); j++) {
        if (j) f << " ";
        f << d.v[(static_cast<int64_t>(c) * d.dim(1) + i) * d.dim(2) + j];
      }
      f << "\n";
    }
}

int cmd_embed(const std::string& in, const std::string& out, const std::string& wm_hex,
              const std::string& key_hex, const std::string& ckpt,
              const std::string& spec_path) {
  wake::ModelParamsF model = load_model(ckpt);
  require_file(in);
  wake::WatermarkBits wm = wake::hex_to_bits(wm_hex, model.shape.payload_bits);
  wake::KeyBits key = wake::hex_to_bits(key_hex, model.shape.key_bits);
  wake::AudioClip x = wake::read_wav(in);
  wake::AudioClip x_wm = wake::embed(x, wm, key, model);
  int64_t clipped = wake::write_wav(x_wm, out);
  if (clipped > 0)
    std::fprintf(stderr, "warning: %lld samples clipped into [-1, 1]\n",
                 static_cast<long long>(clipped));
  if (!spec_path.empty()) dump_spec(wake::stft(x_wm, wake::StftConfig{}), spec_path);
  std::printf("embedded %s under key %s into %s\n", wm_hex.c_str(), key_hex.c_str(),
              out.c_str());
  return 0;
}

int cmd_decode(const std::string& in, const std::string& key_hex, const std::string& ckpt,
               const std::string& redundancy, uint64_t seed, const std::string& spec_path) {
  wake::ModelParamsF model = load_model(ckpt);
  require_file(in);
  wake::KeyBits key = wake::hex_to_bits(key_hex, model.shape.key_bits);
  wake::RedundancySource source;
  if (redundancy == "predict")
    source = wake::RedundancySource::kPredict;
  else if (redundancy == "gaussian")
    source = wake::RedundancySource::kGaussian;
  else
    throw std::invalid_argument("--redundancy must be predict or gaussian");
  wake::AudioClip x = wake::read_wav(in);
  wake::DecodeResult res = wake::decode(x, key, model, source, seed);
  std::printf("payload %s\n", wake::bits_to_hex(res.bits).c_str());
  std::printf("confidence");
  for (float c : res.confidence) std::printf(" %.3f", c);
  std::printf("\n");
  if (!spec_path.empty()) dump_spec(wake::stft(x, wake::StftConfig{}), spec_path);
  return 0;
}

int cmd_attack(const std::string& in, const std::string& out, const std::string& op_name,
               wake::AttackConfig cfg) {
  cfg.op = wake::attack_op_from_name(op_name);
  cfg.validate();
  require_file(in);
  wake::AudioClip x = wake::read_wav(in);
  wake::AudioClip y = wake::apply_attack(x, cfg);
  wake::write_wav(y, out);
  std::printf("applied %s to %s -> %s\n", op_name.c_str(), in.c_str(), out.c_str());
  return 0;
}

int cmd_train(const std::string& config_path) {
  require_file(config_path);
  wake::TrainConfig cfg = wake::train_config_from(wake::ConfigFile::load(config_path));
  wake::CorpusSpec spec;
  spec.tones = cfg.corpus_tones;
  spec.noise = cfg.corpus_noise;
  spec.am = cfg.corpus_am;
  spec.wav_dir = cfg.corpus_wav_dir;
  wake::Rng corpus_rng(cfg.seed ^ 0xc0ffee);
  std::vector<wake::AudioClip> corpus = wake::toy_corpus(spec, corpus_rng);
  std::printf("training on %zu clips for %d steps\n", corpus.size(), cfg.steps);
  wake::Trainer trainer(cfg, std::move(corpus));
  trainer.run([](int step, const wake::StepLosses& l) {
    std::printf("step %6d  strat %d  total %8.4f  L_p %8.4f  L_a %8.4f  d %6.4f\n", step,
                l.strategy, l.total, l.l_p, l.l_a, l.d_loss);
    std::fflush(stdout);
  });
  if (cfg.checkpoint_path.empty())
    std::fprintf(stderr, "warning: no checkpoint_path in config; model discarded\n");
  else
    std::printf("checkpoint written to %s\n", cfg.checkpoint_path.c_str());
  return 0;
}

int cmd_eval(const std::string& config_path, std::string report_path) {
  require_file(config_path);
  wake::EvalConfig cfg = wake::eval_config_from(wake::ConfigFile::load(config_path));
  if (!report_path.empty()) cfg.report_path = report_path;
  wake::ModelParamsF model = load_model(cfg.checkpoint);

  std::vector<wake::AudioClip> clips;
  if (!cfg.clips_dir.empty()) {
    std::vector<std::string> files;
    for (const auto& e : std::filesystem::directory_iterator(cfg.clips_dir))
      if (e.path().extension() == ".wav") files.push_back(e.path().string());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) clips.push_back(wake::read_wav(f));
  } else {
    wake::CorpusSpec spec;
    spec.tones = cfg.holdout_tones;
    spec.noise = cfg.holdout_noise;
    spec.am = cfg.holdout_am;
    wake::Rng rng(cfg.corpus_seed);
    clips = wake::toy_corpus(spec, rng);
  }

  wake::Rng rng(cfg.seed);
  wake::MetricsReport report = wake::evaluate(model, clips, cfg.scenarios, cfg.attacks,
                                              cfg.reps, rng, cfg.redundancy);
  std::ofstream f(cfg.report_path);
  if (!f) throw std::runtime_error("cannot write " + cfg.report_path);
  f << report.to_csv();
  std::printf("report written to %s (%zu rows)\n", cfg.report_path.c_str(),
              report.rows.size());
  return 0;
}

int cmd_selftest(bool quick) {
  using namespace wake::selftest;
  bool ok = true;
  auto line = [&](const char* name, bool pass, double value) {
    std::printf("%-28s %s  (%.3g)\n", name, pass ? "PASS" : "FAIL", value);
    ok = ok && pass;
  };
  double inv = inn_roundtrip_max_err(quick ? 3 : 10, quick ? 16 : 64, 8, 4, 32, 8, 7);
  line("inn invertibility", inv <= 1e-4, inv);
  bool gate = key_gating_exact(8, 4, 16, 6, 11);
  line("key gating", gate, gate ? 1 : 0);
  double rt = stft_roundtrip_max_err(quick ? 5 : 50, 3);
  line("stft round trip", rt <= 1e-5, rt);
  double pg = primitive_gradcheck_worst(quick ? 2 : 10, 17);
  line("primitive gradients", pg < 1e-3, pg);
  double ig = inn_gradcheck_worst(12, 5, 3, 23);
  line("inn composition gradients", ig < 1e-3, ig);
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"key-controllable audio watermarking toolkit"};
  app.require_subcommand(1);

  std::string in, out, wm_hex, key_hex, ckpt, spec_path, config_path, report_path;
  std::string redundancy = "predict", op_name;
  uint64_t seed = 0;
  bool quick = false;
  wake::AttackConfig atk;

  CLI::App* embed = app.add_subcommand("embed", "embed a watermark under a key");
  embed->add_option("--in", in)->required();
  embed->add_option("--out", out)->required();
  embed->add_option("--wm", wm_hex, "payload hex")->required();
  embed->add_option("--key", key_hex, "key hex")->required();
  embed->add_option("--ckpt", ckpt)->required();
  embed->add_option("--dump-spec", spec_path, "write the watermarked spectrogram grid");

  CLI::App* decode = app.add_subcommand("decode", "decode a watermark with a key");
  decode->add_option("--in", in)->required();
  decode->add_option("--key", key_hex)->required();
  decode->add_option("--ckpt", ckpt)->required();
  decode->add_option("--redundancy", redundancy, "predict|gaussian");
  decode->add_option("--seed", seed, "gaussian redundancy seed");
  decode->add_option("--dump-spec", spec_path);

  CLI::App* attack = app.add_subcommand("attack", "apply an editing operation");
  attack->add_option("--in", in)->required();
  attack->add_option("--out", out)->required();
  attack->add_option("--op", op_name, "NA|UD|RN|PN|LF|HF|BF|BA|DA|SA")->required();
  attack->add_option("--cutoff-hz", atk.cutoff_hz);
  attack->add_option("--band-lo-hz", atk.band_lo_hz);
  attack->add_option("--band-hi-hz", atk.band_hi_hz);
  attack->add_option("--snr-db", atk.snr_db);
  attack->add_option("--gain-db", atk.gain_db);
  attack->add_option("--fraction", atk.fraction);
  attack->add_option("--seed", atk.seed);

  CLI::App* train = app.add_subcommand("train", "train a model from a config file");
  train->add_option("--config", config_path)->required();

  CLI::App* eval = app.add_subcommand("eval", "run the evaluation protocol");
  eval->add_option("--config", config_path)->required();
  eval->add_option("--report", report_path, "CSV output path (overrides config)");

  CLI::App* selftest = app.add_subcommand("selftest", "run invertibility/gradient checks");
  selftest->add_flag("--quick", quick);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    if (embed->parsed()) return cmd_embed(in, out, wm_hex, key_hex, ckpt, spec_path);
    if (decode->parsed()) return cmd_decode(in, key_hex, ckpt, redundancy, seed, spec_path);
    if (attack->parsed()) return cmd_attack(in, out, op_name, atk);
    if (train->parsed()) return cmd_train(config_path);
    if (eval->parsed()) return cmd_eval(config_path, report_path);
    if (selftest->parsed()) return cmd_selftest(quick);
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitValidation;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }
  return 0;
}
