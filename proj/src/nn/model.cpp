// Copyright 2026 The mtsot Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "mtsot/nn/model.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/core.h>

#include "mtsot/errors.hpp"
#include "mtsot/kernels.hpp"
#include "mtsot/rng.hpp"

namespace mtsot::nn {

namespace kn = mtsot::kernels;
using nlohmann::ordered_json;

void ModelConfig::validate() const {
  const auto bad = [](const std::string& what) { throw ConfigError(what); };
  if (vocab_size < 1) bad("vocab_size must be >= 1");
  if (feature_dim < 1) bad("feature_dim must be >= 1");
  if (width < 2 || width % 2 != 0) bad("width must be even and >= 2");
  if (heads < 1 || width % heads != 0) bad("heads must divide width");
  if (encoder_layers < 1 || decoder_layers < 1) bad("layer counts must be >= 1");
  if (ffn_mult < 1) bad("ffn_mult must be >= 1");
  if (downsample < 1) bad("downsample must be >= 1");
  if (max_tokens < 2) bad("max_tokens must be >= 2");
}

ordered_json ModelConfig::to_json() const {
  return {{"vocab_size", vocab_size},         {"feature_dim", feature_dim},
          {"width", width},                   {"heads", heads},
          {"encoder_layers", encoder_layers}, {"decoder_layers", decoder_layers},
          {"ffn_mult", ffn_mult},             {"downsample", downsample},
          {"max_tokens", max_tokens},         {"seed", seed}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  ModelConfig c;
  try {
    c.vocab_size = j.at("vocab_size").get<int>();
    c.feature_dim = j.at("feature_dim").get<int>();
    c.width = j.value("width", c.width);
    c.heads = j.value("heads", c.heads);
    c.encoder_layers = j.value("encoder_layers", c.encoder_layers);
    c.decoder_layers = j.value("decoder_layers", c.decoder_layers);
    c.ffn_mult = j.value("ffn_mult", c.ffn_mult);
    c.downsample = j.value("downsample", c.downsample);
    c.max_tokens = j.value("max_tokens", c.max_tokens);
    c.seed = j.value("seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(fmt::format("model config: {}", e.what()));
  }
  c.validate();
  return c;
}

std::size_t adapter_parameter_count(const ModelConfig& cfg, const AdapterConfig& ad) {
  const auto d = static_cast<std::size_t>(cfg.width);
  const auto b = static_cast<std::size_t>(ad.bottleneck);
  const auto layers = static_cast<std::size_t>(cfg.encoder_layers + cfg.decoder_layers);
  return 2 * layers * (2 * d * b + d + b);
}

template <class T>
std::size_t ToyModel<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params) n += p.size();
  return n;
}

template <class T>
std::optional<std::size_t> ToyModel<T>::find(const std::string& name) const {
  for (std::size_t i = 0; i < params.size(); ++i)
    if (params[i].name == name) return i;
  return std::nullopt;
}

template <class T>
void ToyModel<T>::zero_grad() {
  for (auto& p : params) std::fill(p.grad.begin(), p.grad.end(), T(0));
}

namespace {

template <class T>
class Builder {
 public:
  Builder(ToyModel<T>& m, std::uint64_t seed) : m_(m), rng_(seed) {}

  std::size_t add(std::string name, ParamKind kind, std::size_t rows, std::size_t cols,
                  double std_dev, double fill = 0.0) {
    Param<T> p;
    p.name = std::move(name);
    p.kind = kind;
    p.rows = rows;
    p.cols = cols;
    p.value.resize(rows * cols);
    for (T& v : p.value) v = static_cast<T>(std_dev > 0 ? std_dev * rng_.normal() : fill);
    p.grad.assign(rows * cols, T(0));
    m_.params.push_back(std::move(p));
    return m_.params.size() - 1;
  }

  LinearIx linear(const std::string& name, ParamKind kind, std::size_t out, std::size_t in) {
    const std::size_t w = add(name + ".weight", kind, out, in, 1.0 / std::sqrt(double(in)));
    const std::size_t b = add(name + ".bias", kind, 1, out, 0.0);
    return {w, b};
  }

  NormIx norm(const std::string& name, std::size_t d) {
    const std::size_t g = add(name + ".weight", ParamKind::kLayerNorm, 1, d, 0.0, 1.0);
    const std::size_t b = add(name + ".bias", ParamKind::kLayerNorm, 1, d, 0.0);
    return {g, b};
  }

  AttnIx attn(const std::string& name, std::size_t d) {
    return {linear(name + ".q", ParamKind::kAttention, d, d),
            linear(name + ".k", ParamKind::kAttention, d, d),
            linear(name + ".v", ParamKind::kAttention, d, d),
            linear(name + ".o", ParamKind::kAttention, d, d)};
  }

  AdapterIx adapter(const std::string& name, std::size_t d, std::size_t b) {
    AdapterIx a{};
    a.down_w = add(name + ".down.weight", ParamKind::kAdapter, b, d, 1.0 / std::sqrt(double(d)));
    a.down_b = add(name + ".down.bias", ParamKind::kAdapter, 1, b, 0.0);
    a.up_w = add(name + ".up.weight", ParamKind::kAdapter, d, b, 0.0);
    a.up_b = add(name + ".up.bias", ParamKind::kAdapter, 1, d, 0.0);
    return a;
  }

 private:
  ToyModel<T>& m_;
  Rng rng_;
};

// Forward never writes parameters; the mutable view exists because the
// primitives share one parameter type for forward and backward.
template <class T>
Param<T>* mut(const ToyModel<T>& m, std::size_t i) {
  return const_cast<Param<T>*>(&m.params[i]);
}

template <class T>
AttnParams<T> view(const ToyModel<T>& m, const AttnIx& a) {
  return {mut(m, a.q.w), mut(m, a.q.b), mut(m, a.k.w), mut(m, a.k.b),
          mut(m, a.v.w), mut(m, a.v.b), mut(m, a.o.w), mut(m, a.o.b)};
}

template <class T>
AdapterParams<T> view(const ToyModel<T>& m, const AdapterIx& a) {
  return {mut(m, a.down_w), mut(m, a.down_b), mut(m, a.up_w), mut(m, a.up_b)};
}

template <class T>
struct SublayerFfn {
  Mat<T> n, f1, g, f2;
  NormCache<T> ln;
  AdapterCache<T> ad;
};

template <class T>
struct SublayerAttn {
  Mat<T> n, a;
  NormCache<T> ln;
  AttnCache<T> attn;
  AdapterCache<T> ad;
};

template <class T>
struct EncoderBlockTrace {
  SublayerAttn<T> sa;
  SublayerFfn<T> ff;
};

template <class T>
struct DecoderBlockTrace {
  SublayerAttn<T> sa;
  SublayerAttn<T> ca;
  SublayerFfn<T> ff;
};

template <class T>
struct EncoderTrace {
  Mat<T> stacked, pre, h0;
  std::vector<EncoderBlockTrace<T>> blocks;
  NormCache<T> ln;
  Mat<T> out;
};

template <class T>
struct DecoderTrace {
  std::vector<TokenId> tokens;
  std::vector<DecoderBlockTrace<T>> blocks;
  NormCache<T> ln;
  Mat<T> out, logits;
};

// x += adapter?(attn(LN(x), kv))
template <class T>
void attn_sublayer(const ToyModel<T>& m, Mat<T>& x, const Mat<T>* kv, const NormIx& ln,
                   const AttnIx& a, const std::optional<AdapterIx>& ad, bool causal,
                   SublayerAttn<T>& t) {
  layernorm_forward(x, m.params[ln.g], m.params[ln.b], t.n, t.ln);
  attention_forward(t.n, kv ? *kv : t.n, view(m, a), static_cast<std::size_t>(m.config.heads),
                    causal, t.a, t.attn);
  if (ad) {
    Mat<T> y;
    adapter_forward(t.a, view(m, *ad), y, t.ad);
    add_inplace(x, y);
  } else {
    add_inplace(x, t.a);
  }
}

// dx: gradient wrt the sublayer output stream; accumulates the input grad.
// dkv receives the key/value grad for cross-attention.
template <class T>
void attn_sublayer_backward(ToyModel<T>& m, Mat<T>& dx, Mat<T>* dkv, const NormIx& ln,
                            const AttnIx& a, const std::optional<AdapterIx>& ad,
                            const SublayerAttn<T>& t) {
  Mat<T> da = dx;
  if (ad) {
    Mat<T> dz(da.rows, da.cols);
    adapter_backward(da, t.ad, view(m, *ad), dz);
    da = std::move(dz);
  }
  Mat<T> dn(t.n.rows, t.n.cols);
  if (dkv)
    attention_backward(da, t.attn, view(m, a), dn, *dkv);
  else
    attention_backward(da, t.attn, view(m, a), dn, dn);
  layernorm_backward(dn, t.ln, m.params[ln.g], m.params[ln.b], dx);
}

template <class T>
void ffn_sublayer(const ToyModel<T>& m, Mat<T>& x, const NormIx& ln, const LinearIx& fc1,
                  const LinearIx& fc2, const std::optional<AdapterIx>& ad, SublayerFfn<T>& t) {
  layernorm_forward(x, m.params[ln.g], m.params[ln.b], t.n, t.ln);
  linear_forward(t.n, m.params[fc1.w], m.params[fc1.b], t.f1);
  gelu_forward(t.f1, t.g);
  linear_forward(t.g, m.params[fc2.w], m.params[fc2.b], t.f2);
  if (ad) {
    Mat<T> y;
    adapter_forward(t.f2, view(m, *ad), y, t.ad);
    add_inplace(x, y);
  } else {
    add_inplace(x, t.f2);
  }
}

template <class T>
void ffn_sublayer_backward(ToyModel<T>& m, Mat<T>& dx, const NormIx& ln, const LinearIx& fc1,
                           const LinearIx& fc2, const std::optional<AdapterIx>& ad,
                           const SublayerFfn<T>& t) {
  Mat<T> df2 = dx;
  if (ad) {
    Mat<T> dz(df2.rows, df2.cols);
    adapter_backward(df2, t.ad, view(m, *ad), dz);
    df2 = std::move(dz);
  }
  Mat<T> dg(t.g.rows, t.g.cols), df1(t.f1.rows, t.f1.cols), dn(t.n.rows, t.n.cols);
  linear_backward(t.g, df2, m.params[fc2.w], m.params[fc2.b], dg);
  gelu_backward(t.f1, dg, df1);
  linear_backward(t.n, df1, m.params[fc1.w], m.params[fc1.b], dn);
  layernorm_backward(dn, t.ln, m.params[ln.g], m.params[ln.b], dx);
}

template <class T>
void encoder_forward(const ToyModel<T>& m, const FeatureMatrix<T>& x, EncoderTrace<T>& t) {
  if (x.frames == 0) throw ShapeMismatch("encoder input has no frames");
  if (x.dim != static_cast<std::size_t>(m.config.feature_dim))
    throw ShapeMismatch(fmt::format("feature width {} != {}", x.dim, m.config.feature_dim));
  if (x.values.size() != x.frames * x.dim) throw ShapeMismatch("feature buffer size mismatch");
  for (T v : x.values)
    if (!std::isfinite(v)) throw ShapeMismatch("non-finite feature value");
  const auto ds = static_cast<std::size_t>(m.config.downsample);
  const std::size_t lh = (x.frames + ds - 1) / ds;
  t.stacked = Mat<T>(lh, x.dim * ds);
  for (std::size_t f = 0; f < x.frames; ++f)
    std::copy_n(x.values.data() + f * x.dim, x.dim, t.stacked.row(f / ds) + (f % ds) * x.dim);
  linear_forward(t.stacked, m.params[m.frontend.w], m.params[m.frontend.b], t.pre);
  gelu_forward(t.pre, t.h0);
  Mat<T> h = t.h0;
  add_inplace(h, sinusoids<T>(lh, m.width()));
  t.blocks.resize(m.encoder.size());
  for (std::size_t l = 0; l < m.encoder.size(); ++l) {
    const EncoderBlockIx& b = m.encoder[l];
    attn_sublayer(m, h, static_cast<const Mat<T>*>(nullptr), b.ln1, b.attn, b.adapter_attn, false,
                  t.blocks[l].sa);
    ffn_sublayer(m, h, b.ln2, b.fc1, b.fc2, b.adapter_ffn, t.blocks[l].ff);
  }
  layernorm_forward(h, m.params[m.encoder_ln.g], m.params[m.encoder_ln.b], t.out, t.ln);
}

template <class T>
void encoder_backward(ToyModel<T>& m, const Mat<T>& dout, const EncoderTrace<T>& t) {
  Mat<T> dh(dout.rows, dout.cols);
  layernorm_backward(dout, t.ln, m.params[m.encoder_ln.g], m.params[m.encoder_ln.b], dh);
  for (std::size_t l = m.encoder.size(); l-- > 0;) {
    const EncoderBlockIx& b = m.encoder[l];
    ffn_sublayer_backward(m, dh, b.ln2, b.fc1, b.fc2, b.adapter_ffn, t.blocks[l].ff);
    attn_sublayer_backward(m, dh, static_cast<Mat<T>*>(nullptr), b.ln1, b.attn, b.adapter_attn,
                           t.blocks[l].sa);
  }
  Mat<T> dpre(t.pre.rows, t.pre.cols), dstacked(t.stacked.rows, t.stacked.cols);
  gelu_backward(t.pre, dh, dpre);
  linear_backward(t.stacked, dpre, m.params[m.frontend.w], m.params[m.frontend.b], dstacked);
}

template <class T>
void check_tokens(const ToyModel<T>& m, std::span<const TokenId> tokens) {
  if (tokens.size() > static_cast<std::size_t>(m.config.max_tokens))
    throw ShapeMismatch(fmt::format("{} tokens exceed max_tokens {}", tokens.size(),
                                    m.config.max_tokens));
  for (TokenId id : tokens)
    if (id < 0 || id >= m.config.vocab_size)
      throw InvalidToken(fmt::format("token {} outside vocabulary of {}", id, m.config.vocab_size));
}

template <class T>
void decoder_forward(const ToyModel<T>& m, std::span<const TokenId> tokens, const Mat<T>& h,
                     DecoderTrace<T>& t) {
  check_tokens(m, tokens);
  const std::size_t n = tokens.size(), d = m.width();
  t.tokens.assign(tokens.begin(), tokens.end());
  Mat<T> x(n, d);
  const Param<T>& emb = m.params[m.token_embedding];
  const Param<T>& pos = m.params[m.position_embedding];
  for (std::size_t i = 0; i < n; ++i) {
    T* r = x.row(i);
    const T* e = emb.value.data() + static_cast<std::size_t>(tokens[i]) * d;
    const T* p = pos.value.data() + i * d;
    for (std::size_t j = 0; j < d; ++j) r[j] = e[j] + p[j];
  }
  t.blocks.resize(m.decoder.size());
  for (std::size_t l = 0; l < m.decoder.size(); ++l) {
    const DecoderBlockIx& b = m.decoder[l];
    attn_sublayer(m, x, static_cast<const Mat<T>*>(nullptr), b.ln1, b.self_attn, b.adapter_attn,
                  true, t.blocks[l].sa);
    attn_sublayer(m, x, &h, b.ln2, b.cross_attn, std::nullopt, false, t.blocks[l].ca);
    ffn_sublayer(m, x, b.ln3, b.fc1, b.fc2, b.adapter_ffn, t.blocks[l].ff);
  }
  layernorm_forward(x, m.params[m.decoder_ln.g], m.params[m.decoder_ln.b], t.out, t.ln);
  t.logits = Mat<T>(n, static_cast<std::size_t>(m.config.vocab_size));
  kn::matmul_nt(t.out.v.data(), emb.value.data(), t.logits.v.data(), n, t.logits.cols, d, false);
}

// Returns dH.
template <class T>
Mat<T> decoder_backward(ToyModel<T>& m, const Mat<T>& dlogits, const Mat<T>& h,
                        const DecoderTrace<T>& t) {
  const std::size_t n = t.tokens.size(), d = m.width();
  Param<T>& emb = m.params[m.token_embedding];
  Param<T>& pos = m.params[m.position_embedding];
  Mat<T> dout(n, d);
  kn::matmul_nn_acc(dlogits.v.data(), emb.value.data(), dout.v.data(), n, d, dlogits.cols);
  kn::matmul_tn_acc(dlogits.v.data(), t.out.v.data(), emb.grad.data(), dlogits.cols, d, n);
  Mat<T> dx(n, d), dh(h.rows, h.cols);
  layernorm_backward(dout, t.ln, m.params[m.decoder_ln.g], m.params[m.decoder_ln.b], dx);
  for (std::size_t l = m.decoder.size(); l-- > 0;) {
    const DecoderBlockIx& b = m.decoder[l];
    ffn_sublayer_backward(m, dx, b.ln3, b.fc1, b.fc2, b.adapter_ffn, t.blocks[l].ff);
    attn_sublayer_backward(m, dx, &dh, b.ln2, b.cross_attn, std::nullopt, t.blocks[l].ca);
    attn_sublayer_backward(m, dx, static_cast<Mat<T>*>(nullptr), b.ln1, b.self_attn,
                           b.adapter_attn, t.blocks[l].sa);
  }
  for (std::size_t i = 0; i < n; ++i) {
    kn::axpy(T(1), dx.row(i), emb.grad.data() + static_cast<std::size_t>(t.tokens[i]) * d, d);
    kn::axpy(T(1), dx.row(i), pos.grad.data() + i * d, d);
  }
  return dh;
}

}  // namespace

template <class T>
ToyModel<T> build_model(const ModelConfig& cfg) {
  cfg.validate();
  ToyModel<T> m;
  m.config = cfg;
  Builder<T> b(m, substream_seed(cfg.seed, 0));
  const auto d = static_cast<std::size_t>(cfg.width);
  const std::size_t ffn = d * static_cast<std::size_t>(cfg.ffn_mult);
  m.frontend = b.linear("encoder.frontend", ParamKind::kFrontend, d,
                        static_cast<std::size_t>(cfg.feature_dim * cfg.downsample));
  for (int l = 0; l < cfg.encoder_layers; ++l) {
    const std::string p = fmt::format("encoder.blocks.{}", l);
    EncoderBlockIx blk;
    blk.ln1 = b.norm(p + ".attn_ln", d);
    blk.attn = b.attn(p + ".attn", d);
    blk.ln2 = b.norm(p + ".ffn_ln", d);
    blk.fc1 = b.linear(p + ".ffn.fc1", ParamKind::kFeedForward, ffn, d);
    blk.fc2 = b.linear(p + ".ffn.fc2", ParamKind::kFeedForward, d, ffn);
    m.encoder.push_back(blk);
  }
  m.encoder_ln = b.norm("encoder.ln_post", d);
  m.token_embedding = b.add("decoder.token_embedding", ParamKind::kEmbedding,
                            static_cast<std::size_t>(cfg.vocab_size), d, 0.02);
  m.position_embedding = b.add("decoder.position_embedding", ParamKind::kPosition,
                               static_cast<std::size_t>(cfg.max_tokens), d, 0.02);
  for (int l = 0; l < cfg.decoder_layers; ++l) {
    const std::string p = fmt::format("decoder.blocks.{}", l);
    DecoderBlockIx blk;
    blk.ln1 = b.norm(p + ".attn_ln", d);
    blk.self_attn = b.attn(p + ".attn", d);
    blk.ln2 = b.norm(p + ".cross_attn_ln", d);
    blk.cross_attn = b.attn(p + ".cross_attn", d);
    blk.ln3 = b.norm(p + ".ffn_ln", d);
    blk.fc1 = b.linear(p + ".ffn.fc1", ParamKind::kFeedForward, ffn, d);
    blk.fc2 = b.linear(p + ".ffn.fc2", ParamKind::kFeedForward, d, ffn);
    m.decoder.push_back(blk);
  }
  m.decoder_ln = b.norm("decoder.ln_post", d);
  return m;
}

template <class T>
void insert_adapters(ToyModel<T>& m, const AdapterConfig& ad) {
  if (m.adapters) throw ConfigError("model already has adapters");
  if (ad.bottleneck < 1) throw ConfigError("adapter bottleneck must be >= 1");
  Builder<T> b(m, substream_seed(m.config.seed, 1));
  const std::size_t d = m.width(), bn = static_cast<std::size_t>(ad.bottleneck);
  for (std::size_t l = 0; l < m.encoder.size(); ++l) {
    const std::string p = fmt::format("encoder.blocks.{}", l);
    m.encoder[l].adapter_attn = b.adapter(p + ".attn_adapter", d, bn);
    m.encoder[l].adapter_ffn = b.adapter(p + ".ffn_adapter", d, bn);
  }
  for (std::size_t l = 0; l < m.decoder.size(); ++l) {
    const std::string p = fmt::format("decoder.blocks.{}", l);
    m.decoder[l].adapter_attn = b.adapter(p + ".attn_adapter", d, bn);
    m.decoder[l].adapter_ffn = b.adapter(p + ".ffn_adapter", d, bn);
  }
  m.adapters = ad;
}

std::size_t TrainableMask::trainable() const {
  std::size_t n = 0;
  for (const auto& f : flags) n += static_cast<std::size_t>(std::count(f.begin(), f.end(), 1));
  return n;
}

bool TrainableMask::consistent_with(const std::vector<std::size_t>& sizes) const {
  if (flags.size() != sizes.size()) return false;
  for (std::size_t i = 0; i < sizes.size(); ++i)
    if (flags[i].size() != sizes[i]) return false;
  return true;
}

namespace {

template <class T>
TrainableMask uniform_mask(const ToyModel<T>& m, std::uint8_t v) {
  TrainableMask mask;
  for (const auto& p : m.params) mask.flags.emplace_back(p.size(), v);
  return mask;
}

}  // namespace

template <class T>
TrainableMask full_mask(const ToyModel<T>& m) {
  return uniform_mask(m, 1);
}

template <class T>
TrainableMask frozen_mask(const ToyModel<T>& m) {
  return uniform_mask(m, 0);
}

template <class T>
TrainableMask adapter_mask(const ToyModel<T>& m, TokenId speaker_change) {
  if (speaker_change < 0 || speaker_change >= m.config.vocab_size)
    throw InvalidToken(fmt::format("<sc> id {} outside vocabulary", speaker_change));
  TrainableMask mask = uniform_mask(m, 0);
  for (std::size_t i = 0; i < m.params.size(); ++i) {
    const ParamKind k = m.params[i].kind;
    if (k == ParamKind::kAdapter || k == ParamKind::kLayerNorm)
      std::fill(mask.flags[i].begin(), mask.flags[i].end(), 1);
  }
  const std::size_t d = m.width();
  auto& row = mask.flags[m.token_embedding];
  std::fill_n(row.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(speaker_change) * d),
              d, 1);
  return mask;
}

template <class T>
Mat<T> encode(const ToyModel<T>& m, const FeatureMatrix<T>& x) {
  EncoderTrace<T> t;
  encoder_forward(m, x, t);
  return std::move(t.out);
}

template <class T>
std::vector<Mat<T>> encode_batch(const ToyModel<T>& m, const std::vector<FeatureMatrix<T>>& xs) {
  std::vector<Mat<T>> out;
  out.reserve(xs.size());
  for (const auto& x : xs) out.push_back(encode(m, x));
  return out;
}

template <class T>
Mat<T> decoder_logits(const ToyModel<T>& m, std::span<const TokenId> tokens, const Mat<T>& h) {
  if (h.cols != m.width()) throw ShapeMismatch("hidden width mismatch");
  DecoderTrace<T> t;
  decoder_forward(m, tokens, h, t);
  return std::move(t.logits);
}

template <class T>
std::vector<T> decode_step(const ToyModel<T>& m, const PromptSpec& prompt,
                           std::span<const TokenId> prefix, const Mat<T>& h) {
  std::vector<TokenId> tokens = prompt.tokens;
  tokens.insert(tokens.end(), prefix.begin(), prefix.end());
  if (tokens.empty()) throw InvalidToken("decode_step needs at least one context token");
  Mat<T> logits = decoder_logits(m, tokens, h);
  Mat<T> last(1, logits.cols);
  std::copy_n(logits.row(logits.rows - 1), logits.cols, last.row(0));
  softmax_rows(last);
  return std::move(last.v);
}

template <class T>
LossResult<T> teacher_forced_loss(ToyModel<T>& m, const FeatureMatrix<T>& x,
                                  const PromptSpec& prompt, std::span<const TokenId> labels,
                                  bool backward, T grad_scale) {
  if (prompt.tokens.empty()) throw ConfigError("teacher forcing needs at least one prompt token");
  if (labels.empty()) throw LabelOutOfVocab("empty label sequence");
  for (TokenId id : labels)
    if (id < 0 || id >= m.config.vocab_size)
      throw LabelOutOfVocab(fmt::format("label {} outside vocabulary of {}", id, m.config.vocab_size));
  std::vector<TokenId> input = prompt.tokens;
  input.insert(input.end(), labels.begin(), labels.end() - 1);
  const std::size_t first = prompt.tokens.size() - 1;

  EncoderTrace<T> et;
  encoder_forward(m, x, et);
  DecoderTrace<T> dt;
  decoder_forward(m, input, et.out, dt);

  LossResult<T> r;
  r.positions = labels.size();
  Mat<T> dlogits(dt.logits.rows, dt.logits.cols);
  const T inv = T(1) / static_cast<T>(labels.size());
  for (std::size_t k = 0; k < labels.size(); ++k) {
    const std::size_t i = first + k;
    const T* z = dt.logits.row(i);
    const std::size_t v = dt.logits.cols;
    std::size_t arg = 0;
    for (std::size_t j = 1; j < v; ++j)
      if (z[j] > z[arg]) arg = j;
    const T mx = z[arg];
    T s = 0;
    for (std::size_t j = 0; j < v; ++j) s += std::exp(z[j] - mx);
    const auto y = static_cast<std::size_t>(labels[k]);
    r.loss += (std::log(s) + mx - z[y]) * inv;
    r.correct += arg == y;
    if (backward) {
      T* g = dlogits.row(i);
      for (std::size_t j = 0; j < v; ++j) g[j] = std::exp(z[j] - mx) / s * inv * grad_scale;
      g[y] -= inv * grad_scale;
    }
  }
  if (backward) {
    const Mat<T> dh = decoder_backward(m, dlogits, et.out, dt);
    encoder_backward(m, dh, et);
  }
  return r;
}

template <class T>
GreedyResult greedy_decode(const ToyModel<T>& m, const FeatureMatrix<T>& x,
                           const PromptSpec& prompt, TokenId eos, std::size_t max_len) {
  if (prompt.tokens.empty()) throw ConfigError("greedy decoding needs at least one prompt token");
  const Mat<T> h = encode(m, x);
  GreedyResult r;
  std::vector<TokenId> tokens = prompt.tokens;
  const auto cap = static_cast<std::size_t>(m.config.max_tokens);
  while (true) {
    if (r.tokens.size() >= max_len || tokens.size() >= cap) {
      r.truncated = true;
      break;
    }
    const Mat<T> logits = decoder_logits(m, tokens, h);
    const T* z = logits.row(logits.rows - 1);
    TokenId best = 0;
    for (std::size_t j = 1; j < logits.cols; ++j)
      if (z[j] > z[static_cast<std::size_t>(best)]) best = static_cast<TokenId>(j);
    r.tokens.push_back(best);
    tokens.push_back(best);
    if (best == eos) break;
  }
  return r;
}

template <class U, class T>
ToyModel<U> convert_model(const ToyModel<T>& src) {
  ToyModel<U> m;
  m.config = src.config;
  m.adapters = src.adapters;
  m.frontend = src.frontend;
  m.encoder = src.encoder;
  m.encoder_ln = src.encoder_ln;
  m.token_embedding = src.token_embedding;
  m.position_embedding = src.position_embedding;
  m.decoder = src.decoder;
  m.decoder_ln = src.decoder_ln;
  for (const auto& p : src.params) {
    Param<U> q;
    q.name = p.name;
    q.kind = p.kind;
    q.rows = p.rows;
    q.cols = p.cols;
    q.value.assign(p.value.begin(), p.value.end());
    q.grad.assign(p.size(), U(0));
    m.params.push_back(std::move(q));
  }
  return m;
}

#define MTSOT_INSTANTIATE(T)                                                                     \
  template class ToyModel<T>;                                                                   \
  template ToyModel<T> build_model<T>(const ModelConfig&);                                      \
  template void insert_adapters(ToyModel<T>&, const AdapterConfig&);                            \
  template TrainableMask full_mask(const ToyModel<T>&);                                         \
  template TrainableMask frozen_mask(const ToyModel<T>&);                                       \
  template TrainableMask adapter_mask(const ToyModel<T>&, TokenId);                             \
  template Mat<T> encode(const ToyModel<T>&, const FeatureMatrix<T>&);                          \
  template std::vector<Mat<T>> encode_batch(const ToyModel<T>&,                                 \
                                            const std::vector<FeatureMatrix<T>>&);              \
  template Mat<T> decoder_logits(const ToyModel<T>&, std::span<const TokenId>, const Mat<T>&);  \
  template std::vector<T> decode_step(const ToyModel<T>&, const PromptSpec&,                    \
                                      std::span<const TokenId>, const Mat<T>&);                 \
  template LossResult<T> teacher_forced_loss(ToyModel<T>&, const FeatureMatrix<T>&,             \
                                             const PromptSpec&, std::span<const TokenId>, bool, \
                                             T);                                                \
  template GreedyResult greedy_decode(const ToyModel<T>&, const FeatureMatrix<T>&,              \
                                      const PromptSpec&, TokenId, std::size_t);

MTSOT_INSTANTIATE(float)
MTSOT_INSTANTIATE(double)
#undef MTSOT_INSTANTIATE

template ToyModel<double> convert_model<double, float>(const ToyModel<float>&);
template ToyModel<float> convert_model<float, double>(const ToyModel<double>&);

}  // namespace mtsot::nn
