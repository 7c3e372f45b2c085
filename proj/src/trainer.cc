// src/trainer.cc

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

#include "wake/trainer.hh"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

namespace wake {

// ---------------------------------------------------------------------------
// parameter registry. collect_* and flatten_generator_vars must stay in sync.

namespace {

void collect_subnet(const std::string& prefix, Subnet<float>& s, std::vector<ParamRef>& out) {
  for (size_t i = 0; i < s.layers.size(); i++) {
    out.push_back({prefix + ".l" + std::to_string(i) + ".w", &s.layers[i].w});
    out.push_back({prefix + ".l" + std::to_string(i) + ".b", &s.layers[i].b});
  }
}

template <typename T>
void flatten_subnet(const SubnetVars<T>& s, std::vector<Var<T>>& out) {
  for (const auto& l : s.layers) {
    out.push_back(l.w);
    out.push_back(l.b);
  }
}

}  // namespace

std::vector<ParamRef> collect_generator_params(ModelParamsF& m) {
  std::vector<ParamRef> out;
  out.push_back({"codec.embed", &m.codec.embed});
  out.push_back({"codec.map", &m.codec.map});
  for (int i = 0; i < m.inn.n_blocks(); i++) {
    std::string p = "inn.b" + std::to_string(i);
    collect_subnet(p + ".phi", m.inn.blocks[i].phi, out);
    collect_subnet(p + ".rho", m.inn.blocks[i].rho, out);
    collect_subnet(p + ".eta", m.inn.blocks[i].eta, out);
  }
  out.push_back({"predict.stem.w", &m.predict.stem.w});
  out.push_back({"predict.stem.b", &m.predict.stem.b});
  for (size_t i = 0; i < m.predict.blocks.size(); i++) {
    std::string p = "predict.r" + std::to_string(i);
    out.push_back({p + ".c1.w", &m.predict.blocks[i].first.w});
    out.push_back({p + ".c1.b", &m.predict.blocks[i].first.b});
    out.push_back({p + ".c2.w", &m.predict.blocks[i].second.w});
    out.push_back({p + ".c2.b", &m.predict.blocks[i].second.b});
  }
  out.push_back({"predict.head.w", &m.predict.head.w});
  out.push_back({"predict.head.b", &m.predict.head.b});
  return out;
}

template <typename T>
std::vector<Var<T>> flatten_generator_vars(const ModelVars<T>& mv) {
  std::vector<Var<T>> out;
  out.push_back(mv.codec.embed);
  out.push_back(mv.codec.map);
  for (const auto& b : mv.inn.blocks) {
    flatten_subnet(b.phi, out);
    flatten_subnet(b.rho, out);
    flatten_subnet(b.eta, out);
  }
  out.push_back(mv.predict.stem.w);
  out.push_back(mv.predict.stem.b);
  for (const auto& b : mv.predict.blocks) {
    out.push_back(b.first.w);
    out.push_back(b.first.b);
    out.push_back(b.second.w);
    out.push_back(b.second.b);
  }
  out.push_back(mv.predict.head.w);
  out.push_back(mv.predict.head.b);
  return out;
}

std::vector<ParamRef> collect_disc_params(ModelParamsF& m) {
  std::vector<ParamRef> out;
  for (size_t i = 0; i < m.disc.layers.size(); i++) {
    std::string p = "disc.l" + std::to_string(i);
    out.push_back({p + ".w", &m.disc.layers[i].w});
    out.push_back({p + ".b", &m.disc.layers[i].b});
  }
  return out;
}

std::vector<ParamRef> collect_all_params(ModelParamsF& m) {
  std::vector<ParamRef> out = collect_generator_params(m);
  std::vector<ParamRef> d = collect_disc_params(m);
  out.insert(out.end(), d.begin(), d.end());
  return out;
}

// ---------------------------------------------------------------------------
// toy corpus

namespace {

void normalize_peak(std::vector<float>& x, float peak) {
  float mx = 0;
  for (float v : x) mx = std::max(mx, std::abs(v));
  if (mx > 0)
    for (auto& v : x) v *= peak / mx;
}

AudioClip tone_clip(int len, Rng& rng) {
  double f0 = rng.uniform(100.0, 600.0);
  int nh = 3 + static_cast<int>(rng.uniform_int(6));
  std::vector<double> amp(nh), phase(nh);
  for (int h = 0; h < nh; h++) {
    amp[h] = rng.uniform(0.3, 1.0) / (h + 1);
    phase[h] = rng.uniform(0.0, 2.0 * M_PI);
  }
  double decay = rng.uniform(0.0, 2.0);
  int attack = static_cast<int>(rng.uniform(0.005, 0.05) * kSampleRate);
  std::vector<float> x(len);
  for (int n = 0; n < len; n++) {
    double t = static_cast<double>(n) / kSampleRate;
    double s = 0;
    for (int h = 0; h < nh; h++) s += amp[h] * std::sin(2.0 * M_PI * f0 * (h + 1) * t + phase[h]);
    double env = std::exp(-decay * t);
    if (n < attack) env *= static_cast<double>(n) / attack;
    x[n] = static_cast<float>(s * env);
  }
  normalize_peak(x, static_cast<float>(rng.uniform(0.4, 0.8)));
  return AudioClip(std::move(x));
}

AudioClip noise_clip(int len, Rng& rng) {
  std::vector<float> x(len);
  for (auto& v : x) v = static_cast<float>(rng.gaussian());
  int kind = static_cast<int>(rng.uniform_int(3));
  if (kind == 0) {
    run_biquads(butterworth_lowpass(rng.uniform(500.0, 6000.0), kSampleRate, 2), x);
  } else if (kind == 1) {
    run_biquads(butterworth_highpass(rng.uniform(100.0, 2000.0), kSampleRate, 2), x);
  } else {
    double lo = rng.uniform(200.0, 1500.0);
    double hi = rng.uniform(lo * 1.5, 7000.0);
    run_biquads(butterworth_highpass(lo, kSampleRate, 2), x);
    run_biquads(butterworth_lowpass(hi, kSampleRate, 2), x);
  }
  normalize_peak(x, static_cast<float>(rng.uniform(0.3, 0.8)));
  return AudioClip(std::move(x));
}

AudioClip am_clip(int len, Rng& rng) {
  double fc = rng.uniform(300.0, 3000.0);
  double fm = rng.uniform(2.0, 20.0);
  double depth = rng.uniform(0.3, 0.9);
  double phase = rng.uniform(0.0, 2.0 * M_PI);
  std::vector<float> x(len);
  for (int n = 0; n < len; n++) {
    double t = static_cast<double>(n) / kSampleRate;
    x[n] = static_cast<float>(std::sin(2.0 * M_PI * fc * t + phase) *
                              (1.0 + depth * std::sin(2.0 * M_PI * fm * t)));
  }
  normalize_peak(x, static_cast<float>(rng.uniform(0.4, 0.8)));
  return AudioClip(std::move(x));
}

}  // namespace

std::vector<AudioClip> toy_corpus(const CorpusSpec& spec, Rng& rng) {
  std::vector<AudioClip> out;
  for (int i = 0; i < spec.tones; i++) out.push_back(tone_clip(spec.clip_len, rng));
  for (int i = 0; i < spec.noise; i++) out.push_back(noise_clip(spec.clip_len, rng));
  for (int i = 0; i < spec.am; i++) out.push_back(am_clip(spec.clip_len, rng));
  if (!spec.wav_dir.empty()) {
    std::vector<std::string> files;
    for (const auto& e : std::filesystem::directory_iterator(spec.wav_dir))
      if (e.path().extension() == ".wav") files.push_back(e.path().string());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      AudioClip c = read_wav(f);
      if (c.size() < spec.clip_len)
        throw std::runtime_error("corpus: " + f + " is shorter than one clip");
      c.samples.resize(spec.clip_len);
      out.push_back(std::move(c));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Adam

void Adam::init(const std::vector<ParamRef>& params) {
  t = 0;
  m.clear();
  v.clear();
  for (const auto& p : params) {
    m.push_back(TensorF::zeros(p.tensor->shape));
    v.push_back(TensorF::zeros(p.tensor->shape));
  }
}

void Adam::step(const std::vector<ParamRef>& params, const std::vector<TensorF>& grads) {
  t++;
  double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
  double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
  for (size_t i = 0; i < params.size(); i++) {
    TensorF& w = *params[i].tensor;
    const TensorF& g = grads[i];
    for (int64_t j = 0; j < w.numel(); j++) {
      float gj = g.v[j];
      m[i].v[j] = beta1 * m[i].v[j] + (1 - beta1) * gj;
      v[i].v[j] = beta2 * v[i].v[j] + (1 - beta2) * gj * gj;
      float mhat = m[i].v[j] / static_cast<float>(bc1);
      float vhat = v[i].v[j] / static_cast<float>(bc2);
      w.v[j] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
}

// ---------------------------------------------------------------------------
// checkpoint container

namespace {

void put_u32(std::ostream& f, uint32_t v) { f.write(reinterpret_cast<char*>(&v), 4); }
void put_u64(std::ostream& f, uint64_t v) { f.write(reinterpret_cast<char*>(&v), 8); }
void put_str(std::ostream& f, const std::string& s) {
  put_u32(f, static_cast<uint32_t>(s.size()));
  f.write(s.data(), static_cast<std::streamsize>(s.size()));
}
void put_tensor(std::ostream& f, const std::string& name, const TensorF& t) {
  put_str(f, name);
  put_u32(f, static_cast<uint32_t>(t.rank()));
  for (int d : t.shape) put_u32(f, static_cast<uint32_t>(d));
  f.write(reinterpret_cast<const char*>(t.data()),
          static_cast<std::streamsize>(t.numel() * sizeof(float)));
}

uint32_t get_u32(std::istream& f) {
  uint32_t v;
  f.read(reinterpret_cast<char*>(&v), 4);
  if (!f) throw std::runtime_error("checkpoint: truncated file");
  return v;
}
uint64_t get_u64(std::istream& f) {
  uint64_t v;
  f.read(reinterpret_cast<char*>(&v), 8);
  if (!f) throw std::runtime_error("checkpoint: truncated file");
  return v;
}
std::string get_str(std::istream& f) {
  uint32_t n = get_u32(f);
  std::string s(n, '\0');
  f.read(s.data(), n);
  if (!f) throw std::runtime_error("checkpoint: truncated file");
  return s;
}
std::pair<std::string, TensorF> get_tensor(std::istream& f) {
  std::string name = get_str(f);
  uint32_t rank = get_u32(f);
  std::vector<int> shape(rank);
  for (auto& d : shape) d = static_cast<int>(get_u32(f));
  TensorF t(shape);
  f.read(reinterpret_cast<char*>(t.data()),
         static_cast<std::streamsize>(t.numel() * sizeof(float)));
  if (!f) throw std::runtime_error("checkpoint: truncated tensor " + name);
  return {name, std::move(t)};
}

constexpr uint32_t kCheckpointVersion = 1;

}  // namespace

void save_checkpoint(const Checkpoint& ck, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("checkpoint: cannot write " + path);
  f.write("WAKE", 4);
  put_u32(f, kCheckpointVersion);
  put_u64(f, ck.step);
  put_str(f, ck.rng_state);
  put_str(f, ck.config_text);

  ModelParamsF& m = const_cast<ModelParamsF&>(ck.model);
  std::vector<ParamRef> params = collect_all_params(m);
  put_u32(f, static_cast<uint32_t>(params.size()));
  for (const auto& p : params) put_tensor(f, p.name, *p.tensor);

  put_u32(f, static_cast<uint32_t>(ck.opt_state.size()));
  for (const auto& [name, t] : ck.opt_state) put_tensor(f, name, t);
  if (!f) throw std::runtime_error("checkpoint: write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("checkpoint: cannot open " + path);
  char magic[4];
  f.read(magic, 4);
  if (!f || std::memcmp(magic, "WAKE", 4) != 0)
    throw std::runtime_error("checkpoint: bad magic in " + path);
  uint32_t version = get_u32(f);
  if (version != kCheckpointVersion)
    throw std::runtime_error("checkpoint: unsupported format version " +
                             std::to_string(version));
  Checkpoint ck;
  ck.version = version;
  ck.step = get_u64(f);
  ck.rng_state = get_str(f);
  ck.config_text = get_str(f);

  TrainConfig cfg = train_config_from(ConfigFile::parse(ck.config_text));
  Rng dummy(0);
  ck.model = ModelParamsF(cfg.shape, dummy);

  std::vector<ParamRef> params = collect_all_params(ck.model);
  uint32_t n = get_u32(f);
  if (n != params.size())
    throw std::runtime_error("checkpoint: tensor count mismatch in " + path);
  for (uint32_t i = 0; i < n; i++) {
    auto [name, t] = get_tensor(f);
    if (name != params[i].name || !(t.shape == params[i].tensor->shape))
      throw std::runtime_error("checkpoint: unexpected tensor " + name + " in " + path);
    *params[i].tensor = std::move(t);
  }
  uint32_t nopt = get_u32(f);
  for (uint32_t i = 0; i < nopt; i++) ck.opt_state.push_back(get_tensor(f));
  return ck;
}

// ---------------------------------------------------------------------------
// config round trip

TrainConfig train_config_from(const ConfigFile& c) {
  TrainConfig t;
  t.shape.payload_bits = c.get_int("model", "payload_bits", t.shape.payload_bits);
  t.shape.key_bits = c.get_int("model", "key_bits", t.shape.key_bits);
  t.shape.inn_growth = c.get_int("model", "inn_growth", t.shape.inn_growth);
  t.shape.predict_hidden = c.get_int("model", "predict_hidden", t.shape.predict_hidden);
  t.shape.disc_width = c.get_int("model", "disc_width", t.shape.disc_width);
  t.shape.clamp_scale =
      static_cast<float>(c.get_num("model", "clamp_scale", t.shape.clamp_scale));

  t.steps = c.get_int("train", "steps", t.steps);
  t.batch = c.get_int("train", "batch", t.batch);
  t.lr_gen = static_cast<float>(c.get_num("train", "lr_gen", t.lr_gen));
  t.lr_disc = static_cast<float>(c.get_num("train", "lr_disc", t.lr_disc));
  t.seed = static_cast<uint64_t>(c.get_num("train", "seed", static_cast<double>(t.seed)));
  t.p_single = c.get_num("train", "p_single", t.p_single);
  t.clean_prob = c.get_num("train", "clean_prob", t.clean_prob);
  t.checkpoint_every = c.get_int("train", "checkpoint_every", t.checkpoint_every);
  t.checkpoint_path = c.get("train", "checkpoint_path", t.checkpoint_path);
  t.log_every = c.get_int("train", "log_every", t.log_every);
  if (t.p_single < 0 || t.p_single > 1)
    throw std::runtime_error("config: p_single must be in [0, 1]");
  if (t.lr_gen <= 0 || t.lr_disc <= 0)
    throw std::runtime_error("config: learning rates must be positive");
  if (c.has("train", "attacks")) {
    t.attack_menu.clear();
    for (const auto& name : split_list(c.get("train", "attacks", "")))
      t.attack_menu.push_back(attack_op_from_name(name));
  }

  t.weights.w_p1 = static_cast<float>(c.get_num("loss", "w_p1", t.weights.w_p1));
  t.weights.w_p2 = static_cast<float>(c.get_num("loss", "w_p2", t.weights.w_p2));
  t.weights.w_p3 = static_cast<float>(c.get_num("loss", "w_p3", t.weights.w_p3));
  t.weights.w_t1 = static_cast<float>(c.get_num("loss", "w_t1", t.weights.w_t1));
  t.weights.w_t2 = static_cast<float>(c.get_num("loss", "w_t2", t.weights.w_t2));
  t.weights.w_l1 = static_cast<float>(c.get_num("loss", "w_l1", t.weights.w_l1));
  t.weights.w_l2 = static_cast<float>(c.get_num("loss", "w_l2", t.weights.w_l2));
  t.weights.adv_nonsaturating = c.get_int("loss", "adv_nonsaturating", 0) != 0;

  t.corpus_tones = c.get_int("corpus", "tones", t.corpus_tones);
  t.corpus_noise = c.get_int("corpus", "noise", t.corpus_noise);
  t.corpus_am = c.get_int("corpus", "am", t.corpus_am);
  t.corpus_wav_dir = c.get("corpus", "wav_dir", t.corpus_wav_dir);
  return t;
}

std::string train_config_to_text(const TrainConfig& t) {
  ConfigFile c;
  auto num = [](double v) {
    std::ostringstream os;
    os.precision(12);
    os << v;
    return os.str();
  };
  c.set("model", "payload_bits", std::to_string(t.shape.payload_bits));
  c.set("model", "key_bits", std::to_string(t.shape.key_bits));
  c.set("model", "inn_growth", std::to_string(t.shape.inn_growth));
  c.set("model", "predict_hidden", std::to_string(t.shape.predict_hidden));
  c.set("model", "disc_width", std::to_string(t.shape.disc_width));
  c.set("model", "clamp_scale", num(t.shape.clamp_scale));
  c.set("train", "steps", std::to_string(t.steps));
  c.set("train", "batch", std::to_string(t.batch));
  c.set("train", "lr_gen", num(t.lr_gen));
  c.set("train", "lr_disc", num(t.lr_disc));
  c.set("train", "seed", std::to_string(t.seed));
  c.set("train", "p_single", num(t.p_single));
  c.set("train", "clean_prob", num(t.clean_prob));
  c.set("train", "checkpoint_every", std::to_string(t.checkpoint_every));
  if (!t.checkpoint_path.empty()) c.set("train", "checkpoint_path", t.checkpoint_path);
  c.set("train", "log_every", std::to_string(t.log_every));
  std::string menu;
  for (size_t i = 0; i < t.attack_menu.size(); i++)
    menu += (i ? "," : "") + attack_op_name(t.attack_menu[i]);
  c.set("train", "attacks", menu);
  c.set("loss", "w_p1", num(t.weights.w_p1));
  c.set("loss", "w_p2", num(t.weights.w_p2));
  c.set("loss", "w_p3", num(t.weights.w_p3));
  c.set("loss", "w_t1", num(t.weights.w_t1));
  c.set("loss", "w_t2", num(t.weights.w_t2));
  c.set("loss", "w_l1", num(t.weights.w_l1));
  c.set("loss", "w_l2", num(t.weights.w_l2));
  c.set("loss", "adv_nonsaturating", t.weights.adv_nonsaturating ? "1" : "0");
  c.set("corpus", "tones", std::to_string(t.corpus_tones));
  c.set("corpus", "noise", std::to_string(t.corpus_noise));
  c.set("corpus", "am", std::to_string(t.corpus_am));
  if (!t.corpus_wav_dir.empty()) c.set("corpus", "wav_dir", t.corpus_wav_dir);
  return c.serialize();
}

// ---------------------------------------------------------------------------
// trainer

Trainer::Trainer(const TrainConfig& cfg, std::vector<AudioClip> corpus)
    : cfg_(cfg), corpus_(std::move(corpus)), rng_(cfg.seed) {
  if (corpus_.empty()) throw std::invalid_argument("trainer: empty corpus");
  ModelShape s = cfg_.shape;
  model_ = ModelParamsF(s, rng_);
  init_params();
}

Trainer::Trainer(const TrainConfig& cfg, std::vector<AudioClip> corpus, const Checkpoint& ck)
    : cfg_(cfg), corpus_(std::move(corpus)), rng_(cfg.seed) {
  if (corpus_.empty()) throw std::invalid_argument("trainer: empty corpus");
  model_ = ck.model;
  init_params();
  step_ = static_cast<int64_t>(ck.step);
  rng_.set_state(ck.rng_state);
  std::vector<ParamRef> gen = collect_generator_params(model_);
  std::vector<ParamRef> dis = collect_disc_params(model_);
  for (const auto& [name, t] : ck.opt_state) {
    auto restore = [&](const char* prefix, Adam& opt, const std::vector<ParamRef>& ps) {
      std::string p(prefix);
      if (name == p + ".t") {
        opt.t = static_cast<int64_t>(t.v[0]);
        return true;
      }
      for (size_t i = 0; i < ps.size(); i++) {
        if (name == p + ".m." + ps[i].name) {
          opt.m[i] = t;
          return true;
        }
        if (name == p + ".v." + ps[i].name) {
          opt.v[i] = t;
          return true;
        }
      }
      return false;
    };
    if (!restore("adam_gen", opt_gen_, gen) && !restore("adam_disc", opt_disc_, dis))
      throw std::runtime_error("checkpoint: unknown optimizer tensor " + name);
  }
}

void Trainer::init_params() {
  opt_gen_.lr = cfg_.lr_gen;
  opt_disc_.lr = cfg_.lr_disc;
  ModelParamsF& m = model_;
  std::vector<ParamRef> gen = collect_generator_params(m);
  std::vector<ParamRef> dis = collect_disc_params(m);
  opt_gen_.init(gen);
  opt_disc_.init(dis);
  broadweight_ = broadweight_vector(cfg_.shape.clip_len);
  cache_.assign(corpus_.size(), ClipCache{});
}

const Trainer::ClipCache& Trainer::cache_for(int idx) {
  ClipCache& c = cache_[idx];
  if (!c.ready) {
    const AudioClip& x = corpus_[idx];
    c.spec = stft(x, StftConfig{}).data;
    Tape<float> tape;
    tape.recording = false;
    Var<float> xv = tape.leaf(TensorF({static_cast<int>(x.size())}, x.samples));
    Var<float> w = tape.constant(TensorF({static_cast<int>(x.size())}, broadweight_));
    Var<float> xw = mul(xv, w);
    for (const MelBank<float>& bank : mel_banks<float>(mel_cfg_, static_cast<int>(x.size())))
      c.mels.push_back(tape.val(mel_spectrum_op(xw, bank)));
    c.ready = true;
  }
  return c;
}

namespace {

// mel term against precomputed clean-side spectra
template <typename T>
Var<T> mel_loss_cached(Var<T> y, const std::vector<TensorF>& x_mels,
                       const std::vector<T>& weight_vec, const MelScaleConfig& cfg) {
  Tape<T>& t = *y.tape;
  int len = static_cast<int>(t.val(y).numel());
  Var<T> w = t.constant(Tensor<T>({len}, weight_vec));
  Var<T> yw = mul(y, w);
  Var<T> total = t.constant(Tensor<T>::scalar(T(0)));
  const auto& banks = mel_banks<T>(cfg, len);
  for (size_t i = 0; i < banks.size(); i++) {
    Var<T> ref = t.constant(tensor_cast<T>(x_mels[i]));
    Var<T> d = sub(ref, mel_spectrum_op(yw, banks[i]));
    total = add(total, add(mean_v(abs_v(d)), mean_v(mul(d, d))));
  }
  return total;
}

double bce_scalar(const std::vector<float>& logits, const BitVec& wm) {
  double s = 0;
  for (int i = 0; i < wm.size(); i++) {
    double z = logits[i];
    s += std::max(z, 0.0) - z * wm.bits[i] + std::log1p(std::exp(-std::abs(z)));
  }
  return s / wm.size();
}

}  // namespace

void Trainer::accumulate_single(const AudioClip& x, int clip_index, const WatermarkBits& wm,
                                const KeyBits& key, const AttackConfig& attack,
                                StepLosses& out, std::vector<TensorF>& grads,
                                std::vector<float>* fake) {
  const ClipCache& cache = cache_for(clip_index);
  const LossWeights& w = cfg_.weights;

  Tape<float> tape;
  ModelVars<float> mv = lift_generator(tape, model_, true);
  DiscVars<float> dv = lift(tape, model_.disc, false);
  const StftPlan<float>& plan = stft_plan<float>(StftConfig{}, cfg_.shape.clip_len);

  Var<float> xv = tape.constant(TensorF({cfg_.shape.clip_len}, x.samples));
  Var<float> x_wm = embed_op(xv, wm, key, mv, plan);
  Var<float> spec_wm = stft_op(x_wm, plan);

  Var<float> x_e = attack_op_var(x_wm, attack);
  Var<float> spec_e = stft_op(x_e, plan);
  Var<float> wm_pre = predict_forward(spec_e, mv.predict);
  Var<float> logits_re = decode_logits_op(spec_e, key, mv, plan, wm_pre);

  KeyBits k_wrong = sample_key(cfg_.shape.key_bits, rng_, {key});
  Var<float> logits_wrong = decode_logits_op(spec_e, k_wrong, mv, plan, wm_pre);
  double bce_wrong = bce_scalar(tape.val(logits_wrong).v, wm);

  Var<float> l_a = bce_with_logits_op(logits_re, wm);
  double bce_correct = tape.val(l_a).v[0];
  if (bce_wrong < w.w_l2) {
    Var<float> hinge =
        relu(add_const(scale(bce_with_logits_op(logits_wrong, wm), -1.0f), w.w_l2));
    l_a = add(l_a, scale(hinge, w.w_l1));
  }

  // perceptual: time L2 + adversarial + cached-reference mel term
  Var<float> diff = sub(xv, x_wm);
  Var<float> l_p = scale(mean_v(mul(diff, diff)), w.w_p1);
  Var<float> d_out = disc_forward(spec_wm, dv);
  Var<float> adv = w.adv_nonsaturating ? scale(log_v(d_out), -1.0f)
                                       : log_v(add_const(scale(d_out, -1.0f), 1.0f));
  l_p = add(l_p, scale(adv, w.w_p2));
  l_p = add(l_p, scale(mel_loss_cached(x_wm, cache.mels, broadweight_, mel_cfg_), w.w_p3));

  Var<float> total = add(scale(l_p, w.w_t1), scale(l_a, w.w_t2));
  tape.backward(total);

  out.l_p += tape.val(l_p).v[0];
  out.l_a += tape.val(l_a).v[0];
  out.total += tape.val(total).v[0];
  out.bce_correct += bce_correct;
  out.bce_wrong += bce_wrong;
  if (fake) *fake = tape.val(x_wm).v;

  std::vector<Var<float>> flat = flatten_generator_vars(mv);
  for (size_t i = 0; i < flat.size(); i++) {
    const TensorF& g = tape.grad(flat[i]);
    if (g.empty()) continue;
    for (int64_t j = 0; j < g.numel(); j++) grads[i].v[j] += g.v[j];
  }
}

void Trainer::accumulate_double(const AudioClip& x, int clip_index, const WatermarkBits& wm1,
                                const KeyBits& k1, const WatermarkBits& wm2, const KeyBits& k2,
                                const AttackConfig& attack, StepLosses& out,
                                std::vector<TensorF>& grads, std::vector<float>* fake) {
  if (wm1 == wm2 || k1 == k2)
    throw std::invalid_argument("train_step_double: watermarks and keys must be distinct");
  const ClipCache& cache = cache_for(clip_index);
  const LossWeights& w = cfg_.weights;

  Tape<float> tape;
  ModelVars<float> mv = lift_generator(tape, model_, true);
  DiscVars<float> dv = lift(tape, model_.disc, false);
  const StftPlan<float>& plan = stft_plan<float>(StftConfig{}, cfg_.shape.clip_len);

  Var<float> xv = tape.constant(TensorF({cfg_.shape.clip_len}, x.samples));
  Var<float> x_wm1 = embed_op(xv, wm1, k1, mv, plan);
  Var<float> x_wm2 = embed_op(x_wm1, wm2, k2, mv, plan);

  Var<float> x_e = attack_op_var(x_wm2, attack);
  Var<float> spec_e = stft_op(x_e, plan);
  Var<float> wm_pre = predict_forward(spec_e, mv.predict);
  Var<float> logits1 = decode_logits_op(spec_e, k1, mv, plan, wm_pre);
  Var<float> logits2 = decode_logits_op(spec_e, k2, mv, plan, wm_pre);

  KeyBits k_wrong = sample_key(cfg_.shape.key_bits, rng_, {k1, k2});
  Var<float> logits_wrong = decode_logits_op(spec_e, k_wrong, mv, plan, wm_pre);

  Var<float> l_a = add(bce_with_logits_op(logits1, wm1), bce_with_logits_op(logits2, wm2));
  out.bce_correct += tape.val(l_a).v[0] / 2.0;
  for (const auto& [wm, tag] : {std::pair<const WatermarkBits&, int>{wm1, 1},
                                std::pair<const WatermarkBits&, int>{wm2, 2}} ) {
    (void)tag;
    double bw = bce_scalar(tape.val(logits_wrong).v, wm);
    out.bce_wrong += bw / 2.0;
    if (bw < w.w_l2) {
      Var<float> hinge =
          relu(add_const(scale(bce_with_logits_op(logits_wrong, wm), -1.0f), w.w_l2));
      l_a = add(l_a, scale(hinge, w.w_l1));
    }
  }

  // both perceptual terms reference the original x
  auto perceptual = [&](Var<float> marked) {
    Var<float> diff = sub(xv, marked);
    Var<float> lp = scale(mean_v(mul(diff, diff)), w.w_p1);
    Var<float> d_out = disc_forward(stft_op(marked, plan), dv);
    Var<float> adv = w.adv_nonsaturating ? scale(log_v(d_out), -1.0f)
                                         : log_v(add_const(scale(d_out, -1.0f), 1.0f));
    lp = add(lp, scale(adv, w.w_p2));
    return add(lp, scale(mel_loss_cached(marked, cache.mels, broadweight_, mel_cfg_), w.w_p3));
  };
  Var<float> l_p = add(perceptual(x_wm1), perceptual(x_wm2));

  Var<float> total = add(scale(l_p, w.w_t1), scale(l_a, w.w_t2));
  tape.backward(total);

  out.l_p += tape.val(l_p).v[0];
  out.l_a += tape.val(l_a).v[0];
  out.total += tape.val(total).v[0];
  if (fake) *fake = tape.val(x_wm2).v;

  std::vector<Var<float>> flat = flatten_generator_vars(mv);
  for (size_t i = 0; i < flat.size(); i++) {
    const TensorF& g = tape.grad(flat[i]);
    if (g.empty()) continue;
    for (int64_t j = 0; j < g.numel(); j++) grads[i].v[j] += g.v[j];
  }
}

double Trainer::disc_step(const std::vector<std::pair<int, std::vector<float>>>& fakes) {
  std::vector<ParamRef> params = collect_disc_params(model_);
  std::vector<TensorF> grads;
  for (const auto& p : params) grads.push_back(TensorF::zeros(p.tensor->shape));
  double loss_sum = 0;
  const StftPlan<float>& plan = stft_plan<float>(StftConfig{}, cfg_.shape.clip_len);
  for (const auto& [idx, fake] : fakes) {
    Tape<float> tape;
    DiscVars<float> dv = lift(tape, model_.disc, true);
    Var<float> spec_real = tape.constant(cache_for(idx).spec);
    Var<float> spec_fake = stft_op(tape.constant(TensorF({cfg_.shape.clip_len}, fake)), plan);
    Var<float> loss = disc_loss_op(spec_real, spec_fake, dv);
    loss_sum += tape.val(loss).v[0];
    tape.backward(loss);
    std::vector<Var<float>> flat;
    for (const auto& l : dv.layers) {
      flat.push_back(l.w);
      flat.push_back(l.b);
    }
    for (size_t i = 0; i < flat.size(); i++) {
      const TensorF& g = tape.grad(flat[i]);
      if (g.empty()) continue;
      for (int64_t j = 0; j < g.numel(); j++) grads[i].v[j] += g.v[j];
    }
  }
  for (auto& g : grads)
    for (auto& v : g.v) v /= static_cast<float>(fakes.size());
  opt_disc_.step(params, grads);
  return loss_sum / static_cast<double>(fakes.size());
}

void Trainer::check_finite(const char* what) const {
  ModelParamsF& m = const_cast<ModelParamsF&>(model_);
  for (const auto& p : collect_all_params(m))
    if (!p.tensor->all_finite())
      throw std::runtime_error(std::string("trainer: non-finite ") + what + " in " + p.name +
                               " at step " + std::to_string(step_));
}

StepLosses Trainer::step() {
  StepLosses out;
  out.strategy = rng_.uniform() < cfg_.p_single ? 1 : 2;

  AttackConfig attack;  // NA
  if (rng_.uniform() >= cfg_.clean_prob && !cfg_.attack_menu.empty()) {
    std::vector<AttackConfig> menu;
    for (AttackOp op : cfg_.attack_menu) menu.push_back(default_attack(op));
    attack = random_attack(rng_, menu);
    attack.seed = rng_.next_u64();
  }
  out.attack = attack.op;

  std::vector<ParamRef> params = collect_generator_params(model_);
  std::vector<TensorF> grads;
  for (const auto& p : params) grads.push_back(TensorF::zeros(p.tensor->shape));
  std::vector<std::pair<int, std::vector<float>>> fakes;

  for (int b = 0; b < cfg_.batch; b++) {
    int idx = static_cast<int>(rng_.uniform_int(static_cast<uint32_t>(corpus_.size())));
    const AudioClip& x = corpus_[idx];
    std::vector<float> fake;
    if (out.strategy == 1) {
      WatermarkBits wm = BitVec::random(cfg_.shape.payload_bits, rng_);
      KeyBits key = BitVec::random(cfg_.shape.key_bits, rng_);
      accumulate_single(x, idx, wm, key, attack, out, grads, &fake);
    } else {
      WatermarkBits wm1 = BitVec::random(cfg_.shape.payload_bits, rng_);
      KeyBits k1 = BitVec::random(cfg_.shape.key_bits, rng_);
      WatermarkBits wm2 = wm1;
      while (wm2 == wm1) wm2 = BitVec::random(cfg_.shape.payload_bits, rng_);
      KeyBits k2 = sample_key(cfg_.shape.key_bits, rng_, {k1});
      accumulate_double(x, idx, wm1, k1, wm2, k2, attack, out, grads, &fake);
    }
    fakes.emplace_back(idx, std::move(fake));
  }

  for (auto& g : grads)
    for (auto& v : g.v) v /= static_cast<float>(cfg_.batch);
  opt_gen_.step(params, grads);
  out.d_loss = disc_step(fakes);

  double inv_b = 1.0 / cfg_.batch;
  out.l_p *= inv_b;
  out.l_a *= inv_b;
  out.total *= inv_b;
  out.bce_correct *= inv_b;
  out.bce_wrong *= inv_b;

  step_++;
  if (!std::isfinite(out.total) || !std::isfinite(out.d_loss))
    throw std::runtime_error("trainer: non-finite loss at step " + std::to_string(step_));
  check_finite("parameter");
  return out;
}

Checkpoint Trainer::make_checkpoint() const {
  Checkpoint ck;
  ck.step = static_cast<uint64_t>(step_);
  ck.rng_state = rng_.state();
  ck.config_text = train_config_to_text(cfg_);
  ck.model = model_;

  ModelParamsF& m = const_cast<ModelParamsF&>(model_);
  std::vector<ParamRef> gen = collect_generator_params(m);
  std::vector<ParamRef> dis = collect_disc_params(m);
  auto dump = [&ck](const char* prefix, const Adam& opt, const std::vector<ParamRef>& ps) {
    std::string p(prefix);
    ck.opt_state.emplace_back(p + ".t", TensorF::scalar(static_cast<float>(opt.t)));
    for (size_t i = 0; i < ps.size(); i++) {
      ck.opt_state.emplace_back(p + ".m." + ps[i].name, opt.m[i]);
      ck.opt_state.emplace_back(p + ".v." + ps[i].name, opt.v[i]);
    }
  };
  dump("adam_gen", opt_gen_, gen);
  dump("adam_disc", opt_disc_, dis);
  return ck;
}

Checkpoint Trainer::run(const std::function<void(int, const StepLosses&)>& on_log) {
  for (int s = 0; s < cfg_.steps; s++) {
    StepLosses losses = step();
    if (cfg_.log_every > 0 && (s + 1) % cfg_.log_every == 0 && on_log) on_log(s + 1, losses);
    if (cfg_.checkpoint_every > 0 && !cfg_.checkpoint_path.empty() &&
        (s + 1) % cfg_.checkpoint_every == 0 && s + 1 < cfg_.steps)
      save_checkpoint(make_checkpoint(), cfg_.checkpoint_path);
  }
  Checkpoint ck = make_checkpoint();
  if (!cfg_.checkpoint_path.empty()) save_checkpoint(ck, cfg_.checkpoint_path);
  return ck;
}

}  // namespace wake
