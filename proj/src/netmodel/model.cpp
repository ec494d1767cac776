// Copyright 2026 The relrot Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <stdexcept>

#include "relrot/kernels.hpp"
#include "relrot/netmodel.hpp"

namespace relrot {

std::string_view to_string(Parameterization p) {
  return p == Parameterization::Relative ? "relative" : "euler";
}

Parameterization parameterization_from_string(std::string_view s) {
  if (s == "relative") return Parameterization::Relative;
  if (s == "euler") return Parameterization::Euler;
  throw std::invalid_argument("unknown parameterization: " + std::string(s));
}

ModelConfig ModelConfig::paper() {
  ModelConfig c;
  c.decoder.fc_hidden = 464;
  return c;
}

ModelConfig ModelConfig::toy() {
  ModelConfig c;
  c.encoder.input_size = 64;
  c.encoder.stem_channels = 8;
  c.encoder.down_channels = {8, 16, 32};
  c.encoder.up_channels = {16, 8};
  c.encoder.out_channels = 16;
  c.decoder.res_channels = {16, 16};
  c.decoder.fc_hidden = 64;
  return c;
}

void ModelConfig::validate() const {
  const auto& e = encoder;
  if (e.input_size <= 0 || e.input_size % 16 != 0) {
    throw std::invalid_argument("model: input_size must be a positive multiple of 16");
  }
  auto positive = [](int v, const char* what) {
    if (v <= 0) throw std::invalid_argument(std::string("model: ") + what + " must be positive");
  };
  positive(e.stem_channels, "stem_channels");
  for (int c : e.down_channels) positive(c, "down_channels");
  for (int c : e.up_channels) positive(c, "up_channels");
  positive(e.out_channels, "out_channels");
  for (int c : decoder.res_channels) positive(c, "res_channels");
  positive(decoder.fc_hidden, "fc_hidden");
  positive(decoder.out_bins, "out_bins");
}

void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = {{"input_size", c.encoder.input_size},
       {"stem_channels", c.encoder.stem_channels},
       {"down_channels", c.encoder.down_channels},
       {"up_channels", c.encoder.up_channels},
       {"out_channels", c.encoder.out_channels},
       {"res_channels", c.decoder.res_channels},
       {"fc_hidden", c.decoder.fc_hidden},
       {"out_bins", c.decoder.out_bins},
       {"parameterization", to_string(c.parameterization)},
       {"use_correlation", c.use_correlation},
       {"normalize_features", c.normalize_features},
       {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, ModelConfig& c) {
  c = ModelConfig{};
  c.encoder.input_size = j.value("input_size", c.encoder.input_size);
  c.encoder.stem_channels = j.value("stem_channels", c.encoder.stem_channels);
  c.encoder.down_channels = j.value("down_channels", c.encoder.down_channels);
  c.encoder.up_channels = j.value("up_channels", c.encoder.up_channels);
  c.encoder.out_channels = j.value("out_channels", c.encoder.out_channels);
  c.decoder.res_channels = j.value("res_channels", c.decoder.res_channels);
  c.decoder.fc_hidden = j.value("fc_hidden", c.decoder.fc_hidden);
  c.decoder.out_bins = j.value("out_bins", c.decoder.out_bins);
  c.parameterization =
      parameterization_from_string(j.value("parameterization", std::string("relative")));
  c.use_correlation = j.value("use_correlation", c.use_correlation);
  c.normalize_features = j.value("normalize_features", c.normalize_features);
  c.seed = j.value("seed", c.seed);
}

void to_json(nlohmann::json& j, const InputNormalization& n) {
  j = {{"mean", n.mean}, {"std", n.stddev}};
}

void from_json(const nlohmann::json& j, InputNormalization& n) {
  n.mean = j.at("mean").get<std::array<double, 3>>();
  n.stddev = j.at("std").get<std::array<double, 3>>();
}

// ---------------------------------------------------------------------------

Encoder::Encoder(const EncoderConfig& cfg) {
  const auto& d = cfg.down_channels;
  const auto& u = cfg.up_channels;
  stem_ = nn::Conv2d("encoder.stem", 3, cfg.stem_channels, 7, 2, 3, true);
  down_[0] = nn::PreActBlock("encoder.down1", cfg.stem_channels, d[0], 2);
  down_[1] = nn::PreActBlock("encoder.down2", d[0], d[1], 2);
  down_[2] = nn::PreActBlock("encoder.down3", d[1], d[2], 2);
  skip1_c_ = d[1];
  skip2_c_ = d[0];
  up1_bn_ = nn::BatchNorm2d("encoder.up1.bn", d[2] + d[1]);
  up1_conv_ = nn::Conv2d("encoder.up1.conv", d[2] + d[1], u[0], 3, 1, 1, false);
  up2_bn_ = nn::BatchNorm2d("encoder.up2.bn", u[0] + d[0]);
  up2_conv_ = nn::Conv2d("encoder.up2.conv", u[0] + d[0], u[1], 3, 1, 1, false);
  proj_bn_ = nn::BatchNorm2d("encoder.proj.bn", u[1]);
  proj_ = nn::Conv2d("encoder.proj", u[1], cfg.out_channels, 1, 1, 0, true);
}

Tensor Encoder::forward(const Tensor& x) {
  const Tensor e0 = stem_.forward(x);
  const Tensor e1 = down_[0].forward(e0);
  const Tensor e2 = down_[1].forward(e1);
  const Tensor e3 = down_[2].forward(e2);
  const Tensor u1 =
      up1_conv_.forward(up1_relu_.forward(up1_bn_.forward(concat_channels(up1_.forward(e3), e2))));
  const Tensor u2 =
      up2_conv_.forward(up2_relu_.forward(up2_bn_.forward(concat_channels(up2_.forward(u1), e1))));
  return proj_.forward(proj_relu_.forward(proj_bn_.forward(u2)));
}

Tensor Encoder::infer(const Tensor& x) const {
  const Tensor e1 = down_[0].infer(stem_.infer(x));
  const Tensor e2 = down_[1].infer(e1);
  const Tensor e3 = down_[2].infer(e2);
  const Tensor u1 = up1_conv_.infer(
      nn::ReLU::infer(up1_bn_.infer(concat_channels(nn::Upsample2x::infer(e3), e2))));
  const Tensor u2 = up2_conv_.infer(
      nn::ReLU::infer(up2_bn_.infer(concat_channels(nn::Upsample2x::infer(u1), e1))));
  return proj_.infer(nn::ReLU::infer(proj_bn_.infer(u2)));
}

Tensor Encoder::backward(const Tensor& dfeat, bool need_dx) {
  const Tensor du2 = proj_bn_.backward(proj_relu_.backward(proj_.backward(dfeat)));
  Tensor dup2, de1_skip;
  const Tensor dcat2 = up2_bn_.backward(up2_relu_.backward(up2_conv_.backward(du2)));
  split_channels(dcat2, dcat2.shape().c - skip2_c_, dup2, de1_skip);
  const Tensor du1 = up2_.backward(dup2);

  Tensor dup1, de2_skip;
  const Tensor dcat1 = up1_bn_.backward(up1_relu_.backward(up1_conv_.backward(du1)));
  split_channels(dcat1, dcat1.shape().c - skip1_c_, dup1, de2_skip);
  const Tensor de3 = up1_.backward(dup1);

  Tensor de2 = down_[2].backward(de3);
  de2 += de2_skip;
  Tensor de1 = down_[1].backward(de2);
  de1 += de1_skip;
  const Tensor de0 = down_[0].backward(de1);
  return stem_.backward(de0, need_dx);
}

void Encoder::init(std::mt19937_64& rng) {
  stem_.init(rng);
  for (auto& b : down_) b.init(rng);
  up1_conv_.init(rng);
  up2_conv_.init(rng);
  proj_.init(rng);
}

void Encoder::collect(std::vector<nn::Param*>& out) {
  stem_.collect(out);
  for (auto& b : down_) b.collect(out);
  up1_bn_.collect(out);
  up1_conv_.collect(out);
  up2_bn_.collect(out);
  up2_conv_.collect(out);
  proj_bn_.collect(out);
  proj_.collect(out);
}

void Encoder::collect(std::vector<nn::Buffer*>& out) {
  for (auto& b : down_) b.collect(out);
  up1_bn_.collect(out);
  up2_bn_.collect(out);
  proj_bn_.collect(out);
}

// ---------------------------------------------------------------------------

DecoderHead::DecoderHead(const std::string& name, int in_channels, int spatial,
                         const DecoderConfig& cfg, int out_dim) {
  const auto& r = cfg.res_channels;
  block1_ = nn::PreActBlock(name + ".block1", in_channels, r[0], 2);
  block2_ = nn::PreActBlock(name + ".block2", r[0], r[1], 2);
  bn_ = nn::BatchNorm2d(name + ".bn", r[1]);
  const int s = spatial / 4;
  fc1_ = nn::Linear(name + ".fc1", r[1] * s * s, cfg.fc_hidden);
  fc2_ = nn::Linear(name + ".fc2", cfg.fc_hidden, out_dim);
}

Tensor DecoderHead::forward(const Tensor& x) {
  const Tensor h = relu_.forward(bn_.forward(block2_.forward(block1_.forward(x))));
  return fc2_.forward(fc_relu_.forward(fc1_.forward(h)));
}

Tensor DecoderHead::infer(const Tensor& x) const {
  const Tensor h = nn::ReLU::infer(bn_.infer(block2_.infer(block1_.infer(x))));
  return fc2_.infer(nn::ReLU::infer(fc1_.infer(h)));
}

Tensor DecoderHead::backward(const Tensor& dy) {
  const Tensor dh = fc1_.backward(fc_relu_.backward(fc2_.backward(dy)));
  return block1_.backward(block2_.backward(bn_.backward(relu_.backward(dh))));
}

void DecoderHead::init(std::mt19937_64& rng) {
  block1_.init(rng);
  block2_.init(rng);
  fc1_.init(rng);
  fc2_.init(rng, 1.0);
}

void DecoderHead::collect(std::vector<nn::Param*>& out) {
  block1_.collect(out);
  block2_.collect(out);
  bn_.collect(out);
  fc1_.collect(out);
  fc2_.collect(out);
}

void DecoderHead::collect(std::vector<nn::Buffer*>& out) {
  block1_.collect(out);
  block2_.collect(out);
  bn_.collect(out);
}

// ---------------------------------------------------------------------------

namespace {

int decoder_channels(const ModelConfig& cfg) {
  const int fs = cfg.feature_size();
  return cfg.use_correlation ? fs * fs : 2 * cfg.encoder.out_channels;
}

// y = x / |x| per position, in place; returns the norms.
std::vector<double> normalize_positions(Tensor& t) {
  const Shape s = t.shape();
  const std::size_t plane = std::size_t(s.h) * s.w;
  std::vector<double> norms(std::size_t(s.n) * plane);
  for (int n = 0; n < s.n; ++n) {
    auto item = t.item(n);
    for (std::size_t i = 0; i < plane; ++i) {
      double sq = 0.0;
      for (int c = 0; c < s.c; ++c) sq += item[c * plane + i] * item[c * plane + i];
      const double norm = std::max(std::sqrt(sq), 1e-12);
      norms[n * plane + i] = norm;
      for (int c = 0; c < s.c; ++c) item[c * plane + i] /= norm;
    }
  }
  return norms;
}

void correlate_batch(const Tensor& f1, const Tensor& f2, Tensor& vol) {
  const Shape s = f1.shape();
  const kernels::CorrGeometry g{s.n, s.c, s.h * s.w};
  vol = Tensor(Shape{s.n, s.h * s.w, s.h, s.w});
  if (nn::backend() == nn::Backend::Omp) {
    kernels::omp::correlate(g, f1.data(), f2.data(), vol.data());
  } else {
    kernels::serial::correlate(g, f1.data(), f2.data(), vol.data());
  }
}

}  // namespace

RotationNet::RotationNet(const ModelConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  encoder_ = Encoder(cfg_.encoder);
  static constexpr const char* kHeadNames[3] = {"head0", "head1", "head2"};
  for (int i = 0; i < 3; ++i) {
    heads_[i] = DecoderHead(kHeadNames[i], decoder_channels(cfg_), cfg_.feature_size(),
                            cfg_.decoder, cfg_.decoder.out_bins);
  }
  std::mt19937_64 rng(cfg_.seed);
  encoder_.init(rng);
  for (auto& h : heads_) h.init(rng);
}

Tensor RotationNet::normalize(const Tensor& img) const {
  const Shape s = img.shape();
  if (s.c != 3 || s.h != cfg_.encoder.input_size || s.w != cfg_.encoder.input_size) {
    throw std::invalid_argument("RotationNet: expected (B, 3, " +
                                std::to_string(cfg_.encoder.input_size) + ", " +
                                std::to_string(cfg_.encoder.input_size) + ") input, got " +
                                s.str());
  }
  Tensor out(s);
  const std::size_t plane = std::size_t(s.h) * s.w;
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < 3; ++c) {
      const double m = norm_.mean[c], inv = 1.0 / norm_.stddev[c];
      const std::size_t off = (std::size_t(n) * 3 + c) * plane;
      for (std::size_t i = 0; i < plane; ++i) out[off + i] = (img[off + i] - m) * inv;
    }
  return out;
}

Tensor RotationNet::decoder_input(const Tensor& f1, const Tensor& f2) const {
  if (!cfg_.use_correlation) return concat_channels(f1, f2);
  Tensor vol;
  correlate_batch(f1, f2, vol);
  return vol;
}

std::array<Tensor, 3> RotationNet::forward(const Tensor& img1, const Tensor& img2) {
  if (img1.shape() != img2.shape()) throw std::invalid_argument("RotationNet: batch shape mismatch");
  batch_ = img1.shape().n;
  feat_raw_ = encoder_.forward(concat_batch(normalize(img1), normalize(img2)));
  Tensor feats = feat_raw_;
  if (cfg_.normalize_features) normalize_positions(feats);
  feat1_ = slice_batch(feats, 0, batch_);
  feat2_ = slice_batch(feats, batch_, batch_);
  const Tensor in = decoder_input(feat1_, feat2_);
  std::array<Tensor, 3> out;
  for (int i = 0; i < 3; ++i) out[i] = heads_[i].forward(in);
  return out;
}

std::array<Tensor, 3> RotationNet::infer(const Tensor& img1, const Tensor& img2) const {
  if (img1.shape() != img2.shape()) throw std::invalid_argument("RotationNet: batch shape mismatch");
  const int b = img1.shape().n;
  Tensor feats = encoder_.infer(concat_batch(normalize(img1), normalize(img2)));
  if (cfg_.normalize_features) normalize_positions(feats);
  const Tensor in = decoder_input(slice_batch(feats, 0, b), slice_batch(feats, b, b));
  std::array<Tensor, 3> out;
  for (int i = 0; i < 3; ++i) out[i] = heads_[i].infer(in);
  return out;
}

void RotationNet::backward(const std::array<Tensor, 3>& dlogits, Tensor* dimg1, Tensor* dimg2) {
  Tensor din = heads_[0].backward(dlogits[0]);
  din += heads_[1].backward(dlogits[1]);
  din += heads_[2].backward(dlogits[2]);

  Tensor df1, df2;
  if (cfg_.use_correlation) {
    const Shape s = feat1_.shape();
    const kernels::CorrGeometry g{s.n, s.c, s.h * s.w};
    df1 = Tensor(s);
    df2 = Tensor(s);
    if (nn::backend() == nn::Backend::Omp) {
      kernels::omp::correlate_backward(g, feat1_.data(), feat2_.data(), din.data(), df1.data(),
                                       df2.data());
    } else {
      kernels::serial::correlate_backward(g, feat1_.data(), feat2_.data(), din.data(), df1.data(),
                                          df2.data());
    }
  } else {
    split_channels(din, cfg_.encoder.out_channels, df1, df2);
  }
  Tensor dfeat = concat_batch(df1, df2);

  if (cfg_.normalize_features) {
    // d(x/|x|) = (dy - y <y, dy>) / |x|
    Tensor y = feat_raw_;
    const auto norms = normalize_positions(y);
    const Shape s = y.shape();
    const std::size_t plane = std::size_t(s.h) * s.w;
    for (int n = 0; n < s.n; ++n) {
      auto yi = y.item(n);
      auto di = dfeat.item(n);
      for (std::size_t i = 0; i < plane; ++i) {
        double dot = 0.0;
        for (int c = 0; c < s.c; ++c) dot += yi[c * plane + i] * di[c * plane + i];
        const double inv = 1.0 / norms[n * plane + i];
        for (int c = 0; c < s.c; ++c) {
          di[c * plane + i] = (di[c * plane + i] - yi[c * plane + i] * dot) * inv;
        }
      }
    }
  }

  const bool need_dx = dimg1 || dimg2;
  Tensor dx = encoder_.backward(dfeat, need_dx);
  if (!need_dx) return;
  const Shape s = dx.shape();
  const std::size_t plane = std::size_t(s.h) * s.w;
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < 3; ++c) {
      const double inv = 1.0 / norm_.stddev[c];
      const std::size_t off = (std::size_t(n) * 3 + c) * plane;
      for (std::size_t i = 0; i < plane; ++i) dx[off + i] *= inv;
    }
  if (dimg1) *dimg1 = slice_batch(dx, 0, batch_);
  if (dimg2) *dimg2 = slice_batch(dx, batch_, batch_);
}

FeatureMap RotationNet::encode(const Image& img) const {
  FeatureMap f{encoder_.infer(normalize(image_to_tensor(img, cfg_.encoder.input_size))), {}};
  if (cfg_.normalize_features) normalize_positions(f.data);
  return f;
}

Prediction RotationNet::predict(const Image& img1, const Image& img2, Decoding d) const {
  const int s = cfg_.encoder.input_size;
  return predict_batch(image_to_tensor(img1, s), image_to_tensor(img2, s), d).front();
}

std::vector<Prediction> RotationNet::predict_batch(const Tensor& img1, const Tensor& img2,
                                                   Decoding d) const {
  const auto logits = infer(img1, img2);
  std::vector<Prediction> out;
  out.reserve(std::size_t(img1.shape().n));
  for (int n = 0; n < img1.shape().n; ++n) {
    std::array<std::vector<double>, 3> l;
    for (int i = 0; i < 3; ++i) {
      const auto row = logits[i].item(n);
      l[i].assign(row.begin(), row.end());
    }
    out.push_back(make_prediction(std::move(l), cfg_.parameterization, d));
  }
  return out;
}

std::vector<nn::Param*> RotationNet::parameters() {
  std::vector<nn::Param*> out;
  encoder_.collect(out);
  for (auto& h : heads_) h.collect(out);
  return out;
}

std::vector<nn::Buffer*> RotationNet::buffers() {
  std::vector<nn::Buffer*> out;
  encoder_.collect(out);
  for (auto& h : heads_) h.collect(out);
  return out;
}

std::size_t RotationNet::parameter_count() const {
  std::size_t n = 0;
  for (const nn::Param* p : const_cast<RotationNet*>(this)->parameters()) n += p->size();
  return n;
}

void Trainable::zero_grad() {
  for (nn::Param* p : parameters()) p->zero_grad();
}

double RotationNet::train_step(const Tensor& img1, const Tensor& img2,
                               std::span<const RelPoseParam> labels) {
  const auto logits = forward(img1, img2);
  std::array<Tensor, 3> grads;
  const double l = batch_loss(logits, labels, cfg_.parameterization, &grads);
  backward(grads);
  return l;
}

nlohmann::json RotationNet::describe() const {
  return {{"model", cfg_}, {"normalization", norm_}};
}

std::size_t parameter_count(const RotationNet& net) { return net.parameter_count(); }

std::size_t expected_parameter_count(const ModelConfig& cfg) {
  cfg.validate();
  auto conv = [](std::size_t in, std::size_t out, std::size_t k, bool bias) {
    return in * out * k * k + (bias ? out : 0);
  };
  auto bn = [](std::size_t c) { return 2 * c; };
  auto block = [&](std::size_t in, std::size_t out, bool strided) {
    std::size_t n = bn(in) + conv(in, out, 3, false) + bn(out) + conv(out, out, 3, false);
    if (strided || in != out) n += conv(in, out, 1, false);
    return n;
  };
  const auto& e = cfg.encoder;
  const std::size_t s = e.stem_channels, d0 = e.down_channels[0], d1 = e.down_channels[1],
                    d2 = e.down_channels[2], u0 = e.up_channels[0], u1 = e.up_channels[1],
                    k = e.out_channels;
  std::size_t enc = conv(3, s, 7, true) + block(s, d0, true) + block(d0, d1, true) +
                    block(d1, d2, true) + bn(d2 + d1) + conv(d2 + d1, u0, 3, false) +
                    bn(u0 + d0) + conv(u0 + d0, u1, 3, false) + bn(u1) + conv(u1, k, 1, true);

  const auto& d = cfg.decoder;
  const std::size_t in = std::size_t(decoder_channels(cfg));
  const std::size_t r0 = d.res_channels[0], r1 = d.res_channels[1];
  const std::size_t sp = std::size_t(cfg.feature_size() / 4);
  const std::size_t flat = r1 * sp * sp, hid = d.fc_hidden, bins = d.out_bins;
  const std::size_t head = block(in, r0, true) + block(r0, r1, true) + bn(r1) + flat * hid + hid +
                           hid * bins + bins;
  return enc + 3 * head;
}

}  // namespace relrot
