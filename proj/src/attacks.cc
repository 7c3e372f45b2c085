// src/attacks.cc

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

#include "wake/attacks.hh"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace wake {

std::string attack_op_name(AttackOp op) {
  switch (op) {
    case AttackOp::NA: return "NA";
    case AttackOp::UD: return "UD";
    case AttackOp::RN: return "RN";
    case AttackOp::PN: return "PN";
    case AttackOp::LF: return "LF";
    case AttackOp::HF: return "HF";
    case AttackOp::BF: return "BF";
    case AttackOp::BA: return "BA";
    case AttackOp::DA: return "DA";
    case AttackOp::SA: return "SA";
  }
  return "??";
}

AttackOp attack_op_from_name(const std::string& name) {
  static const std::pair<const char*, AttackOp> table[] = {
      {"NA", AttackOp::NA}, {"UD", AttackOp::UD}, {"RN", AttackOp::RN},
      {"PN", AttackOp::PN}, {"LF", AttackOp::LF}, {"HF", AttackOp::HF},
      {"BF", AttackOp::BF}, {"BA", AttackOp::BA}, {"DA", AttackOp::DA},
      {"SA", AttackOp::SA}};
  for (const auto& [n, op] : table)
    if (name == n) return op;
  throw std::invalid_argument("unknown attack op \"" + name + "\"");
}

void AttackConfig::validate() const {
  double nyquist = kSampleRate / 2.0;
  if (op == AttackOp::LF || op == AttackOp::HF) {
    if (cutoff_hz <= 0 || cutoff_hz >= nyquist)
      throw std::invalid_argument("attack: cutoff_hz must be in (0, 8000), got " +
                                  std::to_string(cutoff_hz));
  }
  if (op == AttackOp::BF) {
    if (band_lo_hz <= 0 || band_hi_hz >= nyquist || band_lo_hz >= band_hi_hz)
      throw std::invalid_argument("attack: band edges must satisfy 0 < lo < hi < 8000");
  }
  if (op == AttackOp::RN || op == AttackOp::PN) {
    if (snr_db <= 0)
      throw std::invalid_argument("attack: snr_db must be positive, got " +
                                  std::to_string(snr_db));
  }
  if (op == AttackOp::SA) {
    if (fraction < 0 || fraction > 1)
      throw std::invalid_argument("attack: fraction must be in [0, 1], got " +
                                  std::to_string(fraction));
  }
}

AttackConfig default_attack(AttackOp op, uint64_t seed) {
  AttackConfig cfg;
  cfg.op = op;
  cfg.seed = seed;
  if (op == AttackOp::HF) cfg.cutoff_hz = 500.0;
  return cfg;
}

// ---------------------------------------------------------------------------
// filters

std::vector<Biquad> butterworth_lowpass(double cutoff_hz, double fs, int order) {
  if (order % 2) throw std::invalid_argument("butterworth: even order required");
  std::vector<Biquad> out;
  double w0 = 2.0 * M_PI * cutoff_hz / fs;
  for (int s = 0; s < order / 2; s++) {
    double theta = M_PI * (2.0 * s + 1.0) / (2.0 * order);
    double q = 1.0 / (2.0 * std::cos(theta));
    double alpha = std::sin(w0) / (2.0 * q);
    double c = std::cos(w0);
    double a0 = 1 + alpha;
    Biquad b;
    b.b0 = (1 - c) / 2 / a0;
    b.b1 = (1 - c) / a0;
    b.b2 = (1 - c) / 2 / a0;
    b.a1 = -2 * c / a0;
    b.a2 = (1 - alpha) / a0;
    out.push_back(b);
  }
  return out;
}

std::vector<Biquad> butterworth_highpass(double cutoff_hz, double fs, int order) {
  if (order % 2) throw std::invalid_argument("butterworth: even order required");
  std::vector<Biquad> out;
  double w0 = 2.0 * M_PI * cutoff_hz / fs;
  for (int s = 0; s < order / 2; s++) {
    double theta = M_PI * (2.0 * s + 1.0) / (2.0 * order);
    double q = 1.0 / (2.0 * std::cos(theta));
    double alpha = std::sin(w0) / (2.0 * q);
    double c = std::cos(w0);
    double a0 = 1 + alpha;
    Biquad b;
    b.b0 = (1 + c) / 2 / a0;
    b.b1 = -(1 + c) / a0;
    b.b2 = (1 + c) / 2 / a0;
    b.a1 = -2 * c / a0;
    b.a2 = (1 - alpha) / a0;
    out.push_back(b);
  }
  return out;
}

template <typename T>
void run_biquads(const std::vector<Biquad>& sections, std::vector<T>& x) {
  for (const Biquad& s : sections) {
    double z1 = 0, z2 = 0;  // transposed direct form II, zero initial state
    for (auto& v : x) {
      double in = static_cast<double>(v);
      double out = s.b0 * in + z1;
      z1 = s.b1 * in - s.a1 * out + z2;
      z2 = s.b2 * in - s.a2 * out;
      v = static_cast<T>(out);
    }
  }
}

template void run_biquads<float>(const std::vector<Biquad>&, std::vector<float>&);
template void run_biquads<double>(const std::vector<Biquad>&, std::vector<double>&);

namespace {

std::vector<Biquad> filter_sections(const AttackConfig& cfg) {
  switch (cfg.op) {
    case AttackOp::LF:
      return butterworth_lowpass(cfg.cutoff_hz, kSampleRate, 4);
    case AttackOp::HF:
      return butterworth_highpass(cfg.cutoff_hz, kSampleRate, 4);
    case AttackOp::BF: {
      auto hp = butterworth_highpass(cfg.band_lo_hz, kSampleRate, 4);
      auto lp = butterworth_lowpass(cfg.band_hi_hz, kSampleRate, 4);
      hp.insert(hp.end(), lp.begin(), lp.end());
      return hp;
    }
    default:
      return {};
  }
}

// adjoint of zero-state causal filtering: reverse, filter, reverse
template <typename T>
void run_biquads_adjoint(const std::vector<Biquad>& sections, std::vector<T>& g) {
  std::reverse(g.begin(), g.end());
  run_biquads(sections, g);
  std::reverse(g.begin(), g.end());
}

// ---------------------------------------------------------------------------
// resampler (UD): 16 kHz -> 8 kHz -> 16 kHz, 32-tap Kaiser windowed sinc

double bessel_i0(double x) {
  double sum = 1.0, term = 1.0;
  for (int k = 1; k < 64; k++) {
    term *= (x / 2.0) * (x / 2.0) / (k * k);
    sum += term;
    if (term < 1e-16 * sum) break;
  }
  return sum;
}

const std::vector<double>& halfband_fir() {
  static const std::vector<double> h = [] {
    const int taps = 32;
    const double beta = 8.0;
    std::vector<double> w(taps);
    double center = (taps - 1) / 2.0;
    double denom = bessel_i0(beta);
    double sum = 0;
    for (int k = 0; k < taps; k++) {
      double t = (k - center) / 2.0;  // cutoff at quarter sample rate
      double sinc = t == 0 ? 1.0 : std::sin(M_PI * t) / (M_PI * t);
      double r = (k - center) / center;
      double kais = bessel_i0(beta * std::sqrt(std::max(0.0, 1.0 - r * r))) / denom;
      w[k] = 0.5 * sinc * kais;
      sum += w[k];
    }
    for (auto& v : w) v /= sum;  // unit DC gain
    return w;
  }();
  return h;
}

template <typename T>
std::vector<T> fir_causal(const std::vector<T>& x, const std::vector<double>& h) {
  std::vector<T> y(x.size(), T(0));
  for (size_t n = 0; n < x.size(); n++) {
    double acc = 0;
    size_t kmax = std::min(h.size() - 1, n);
    for (size_t k = 0; k <= kmax; k++) acc += h[k] * static_cast<double>(x[n - k]);
    y[n] = static_cast<T>(acc);
  }
  return y;
}

// transpose of fir_causal: correlation against future samples
template <typename T>
std::vector<T> fir_causal_adjoint(const std::vector<T>& g, const std::vector<double>& h) {
  std::vector<T> y(g.size(), T(0));
  for (size_t n = 0; n < g.size(); n++) {
    double acc = 0;
    size_t kmax = std::min(h.size() - 1, g.size() - 1 - n);
    for (size_t k = 0; k <= kmax; k++) acc += h[k] * static_cast<double>(g[n + k]);
    y[n] = static_cast<T>(acc);
  }
  return y;
}

constexpr int kUdDelay = 31;  // two 32-tap filters, 15.5 samples each

template <typename T>
std::vector<T> up_down_sample(const std::vector<T>& x) {
  const std::vector<double>& h = halfband_fir();
  std::vector<T> a = fir_causal(x, h);
  std::vector<T> u(x.size(), T(0));
  for (size_t m = 0; 2 * m < x.size(); m++) u[2 * m] = a[2 * m];  // decimate + zero-stuff
  std::vector<double> h2(h);
  for (auto& v : h2) v *= 2.0;
  std::vector<T> b = fir_causal(u, h2);
  std::vector<T> out(x.size(), T(0));
  for (size_t n = 0; n + kUdDelay < x.size(); n++) out[n] = b[n + kUdDelay];
  return out;
}

template <typename T>
std::vector<T> up_down_sample_adjoint(const std::vector<T>& g) {
  const std::vector<double>& h = halfband_fir();
  std::vector<T> gb(g.size(), T(0));
  for (size_t n = 0; n + kUdDelay < g.size(); n++) gb[n + kUdDelay] = g[n];
  std::vector<double> h2(h);
  for (auto& v : h2) v *= 2.0;
  std::vector<T> gu = fir_causal_adjoint(gb, h2);
  std::vector<T> ga(g.size(), T(0));
  for (size_t m = 0; 2 * m < g.size(); m++) ga[2 * m] = gu[2 * m];
  return fir_causal_adjoint(ga, h);
}

// ---------------------------------------------------------------------------
// noise

template <typename T>
std::vector<double> white_noise(size_t n, Rng& rng) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.gaussian();
  return v;
}

// Voss-McCartney pink noise: one always-updating row plus rows updated at
// octave-spaced rates
std::vector<double> pink_noise(size_t n, Rng& rng) {
  constexpr int rows = 14;
  double row_val[rows];
  double sum = 0;
  for (int r = 0; r < rows; r++) {
    row_val[r] = rng.gaussian();
    sum += row_val[r];
  }
  std::vector<double> v(n);
  for (size_t i = 0; i < n; i++) {
    if (i > 0) {
      int r = 0;
      size_t c = i;
      while (!(c & 1) && r < rows - 1) {
        c >>= 1;
        r++;
      }
      sum -= row_val[r];
      row_val[r] = rng.gaussian();
      sum += row_val[r];
    }
    v[i] = sum + rng.gaussian();  // white row
  }
  return v;
}

template <typename T>
void add_noise_at_snr(std::vector<T>& x, std::vector<double> noise, double snr_db) {
  double px = 0, pn = 0;
  for (T s : x) px += static_cast<double>(s) * static_cast<double>(s);
  for (double s : noise) pn += s * s;
  if (px <= 0 || pn <= 0) return;  // silent input stays silent
  double target = px / std::pow(10.0, snr_db / 10.0);
  double g = std::sqrt(target / pn);
  for (size_t i = 0; i < x.size(); i++) x[i] += static_cast<T>(g * noise[i]);
}

}  // namespace

// ---------------------------------------------------------------------------

template <typename T>
std::vector<T> apply_attack_vec(const std::vector<T>& x, const AttackConfig& cfg) {
  cfg.validate();
  std::vector<T> y = x;
  switch (cfg.op) {
    case AttackOp::NA:
      break;
    case AttackOp::BA:
    case AttackOp::DA: {
      double db = cfg.op == AttackOp::BA ? cfg.gain_db : -cfg.gain_db;
      T g = static_cast<T>(std::pow(10.0, db / 20.0));
      for (auto& v : y) v *= g;
      break;
    }
    case AttackOp::RN: {
      Rng rng(cfg.seed);
      add_noise_at_snr(y, white_noise<T>(y.size(), rng), cfg.snr_db);
      break;
    }
    case AttackOp::PN: {
      Rng rng(cfg.seed);
      add_noise_at_snr(y, pink_noise(y.size(), rng), cfg.snr_db);
      break;
    }
    case AttackOp::LF:
    case AttackOp::HF:
    case AttackOp::BF:
      run_biquads(filter_sections(cfg), y);
      break;
    case AttackOp::UD:
      y = up_down_sample(y);
      break;
    case AttackOp::SA: {
      size_t span = static_cast<size_t>(std::floor(cfg.fraction * y.size()));
      if (span > 0) {
        Rng rng(cfg.seed);
        size_t start = rng.uniform_int(static_cast<uint32_t>(y.size() - span + 1));
        std::fill(y.begin() + start, y.begin() + start + span, T(0));
      }
      break;
    }
  }
  return y;
}

template <typename T>
std::vector<T> apply_attack_adjoint_vec(const std::vector<T>& g, const AttackConfig& cfg) {
  std::vector<T> y = g;
  switch (cfg.op) {
    case AttackOp::NA:
    case AttackOp::RN:
    case AttackOp::PN:
      break;  // additive noise is constant under the linearization
    case AttackOp::BA:
    case AttackOp::DA: {
      double db = cfg.op == AttackOp::BA ? cfg.gain_db : -cfg.gain_db;
      T gain = static_cast<T>(std::pow(10.0, db / 20.0));
      for (auto& v : y) v *= gain;
      break;
    }
    case AttackOp::LF:
    case AttackOp::HF:
    case AttackOp::BF:
      run_biquads_adjoint(filter_sections(cfg), y);
      break;
    case AttackOp::UD:
      y = up_down_sample_adjoint(y);
      break;
    case AttackOp::SA: {
      size_t span = static_cast<size_t>(std::floor(cfg.fraction * y.size()));
      if (span > 0) {
        Rng rng(cfg.seed);
        size_t start = rng.uniform_int(static_cast<uint32_t>(y.size() - span + 1));
        std::fill(y.begin() + start, y.begin() + start + span, T(0));
      }
      break;
    }
  }
  return y;
}

template std::vector<float> apply_attack_vec<float>(const std::vector<float>&,
                                                    const AttackConfig&);
template std::vector<double> apply_attack_vec<double>(const std::vector<double>&,
                                                      const AttackConfig&);
template std::vector<float> apply_attack_adjoint_vec<float>(const std::vector<float>&,
                                                            const AttackConfig&);
template std::vector<double> apply_attack_adjoint_vec<double>(const std::vector<double>&,
                                                              const AttackConfig&);

AudioClip apply_attack(const AudioClip& clip, const AttackConfig& cfg) {
  AudioClip out = clip;
  out.samples = apply_attack_vec(clip.samples, cfg);
  return out;
}

AttackConfig random_attack(Rng& rng, const std::vector<AttackConfig>& menu) {
  if (menu.empty()) throw std::invalid_argument("random_attack: empty menu");
  return menu[rng.uniform_int(static_cast<uint32_t>(menu.size()))];
}

}  // namespace wake
