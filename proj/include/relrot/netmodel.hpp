// Copyright 2026 The relrot Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "relrot/corrvol.hpp"
#include "relrot/image.hpp"
#include "relrot/nn.hpp"
#include "relrot/rotgeom.hpp"

namespace relrot {

/// What the three heads predict: (beta1, beta2, delta_gamma) for upright
/// cameras, or the roll/pitch/yaw of the relative rotation itself.
enum class Parameterization { Relative, Euler };
enum class Decoding { Argmax, Expectation };

std::string_view to_string(Parameterization p);
Parameterization parameterization_from_string(std::string_view s);

/// ResUNet encoder: 7x7/2 stem, three strided pre-activation blocks, two
/// upsample + 3x3 conv stages with skip concatenation, 1x1 projection.
struct EncoderConfig {
  int input_size = 128;
  int stem_channels = 64;
  std::array<int, 3> down_channels{64, 128, 256};
  std::array<int, 2> up_channels{128, 64};
  int out_channels = 32;
};

/// Per-angle decoder: two strided pre-activation blocks then two FC layers.
struct DecoderConfig {
  std::array<int, 2> res_channels{128, 128};
  int fc_hidden = 512;
  int out_bins = 360;
};

struct ModelConfig {
  EncoderConfig encoder;
  DecoderConfig decoder;
  Parameterization parameterization = Parameterization::Relative;
  bool use_correlation = true;      // false: decoders see concatenated features
  bool normalize_features = false;  // L2-normalize descriptors before correlating
  std::uint64_t seed = 0;

  /// ~19M parameters at 128x128 input.
  static ModelConfig paper();
  /// 64x64 input, 8-channel stem; trains in minutes on a CPU.
  static ModelConfig toy();

  /// Throws invalid_argument on degenerate widths or an input size that is
  /// not a positive multiple of 16.
  void validate() const;
  int feature_size() const { return encoder.input_size / 4; }
};

void to_json(nlohmann::json& j, const ModelConfig& c);
void from_json(const nlohmann::json& j, ModelConfig& c);

/// Per-channel standardization applied to [0, 1] inputs.
struct InputNormalization {
  std::array<double, 3> mean{0.5, 0.5, 0.5};
  std::array<double, 3> stddev{0.25, 0.25, 0.25};
};

void to_json(nlohmann::json& j, const InputNormalization& n);
void from_json(const nlohmann::json& j, InputNormalization& n);

class Encoder {
 public:
  Encoder() = default;
  explicit Encoder(const EncoderConfig& cfg);

  Tensor forward(const Tensor& x);
  Tensor infer(const Tensor& x) const;
  /// Gradient w.r.t. the input when `need_dx`, else an empty tensor.
  Tensor backward(const Tensor& dfeat, bool need_dx);
  void init(std::mt19937_64& rng);
  void collect(std::vector<nn::Param*>& out);
  void collect(std::vector<nn::Buffer*>& out);

 private:
  nn::Conv2d stem_;
  std::array<nn::PreActBlock, 3> down_;
  nn::Upsample2x up1_, up2_;
  nn::BatchNorm2d up1_bn_, up2_bn_, proj_bn_;
  nn::ReLU up1_relu_, up2_relu_, proj_relu_;
  nn::Conv2d up1_conv_, up2_conv_, proj_;
  int skip1_c_ = 0, skip2_c_ = 0;
};

class DecoderHead {
 public:
  DecoderHead() = default;
  DecoderHead(const std::string& name, int in_channels, int spatial, const DecoderConfig& cfg,
              int out_dim);

  Tensor forward(const Tensor& x);
  Tensor infer(const Tensor& x) const;
  Tensor backward(const Tensor& dy);
  void init(std::mt19937_64& rng);
  void collect(std::vector<nn::Param*>& out);
  void collect(std::vector<nn::Buffer*>& out);

 private:
  nn::PreActBlock block1_, block2_;
  nn::BatchNorm2d bn_;
  nn::ReLU relu_, fc_relu_;
  nn::Linear fc1_, fc2_;
};

/// Output of one forward pass for one pair.
struct Prediction {
  std::array<std::vector<double>, 3> logits;
  std::array<AngleDistribution, 3> distributions;
  std::array<double, 3> decoded{};  // degrees, per head
  Parameterization parameterization = Parameterization::Relative;
  RotationMatrix rotation;

  RelPoseParam decoded_params() const { return {decoded[0], decoded[1], decoded[2]}; }
};

/// Softmax, decoding and rotation assembly for one pair's logits.
Prediction make_prediction(std::array<std::vector<double>, 3> logits, Parameterization p,
                           Decoding d = Decoding::Argmax);
RotationMatrix rotation_from_angles(const std::array<double, 3>& angles, Parameterization p);
/// Per-head target angles for a ground-truth label.
std::array<double, 3> target_angles(const RelPoseParam& gt, Parameterization p);

/// Argmax bin centers of the three heads composed into a rotation.
RotationMatrix predict_rotation(const Prediction& pred);

/// Sum of the three cross-entropies against one-hot target bins.
double loss(const Prediction& pred, const RelPoseParam& gt);

/// Batched loss on (B, bins) logits; mean over the batch of the per-pair sum.
/// When `grads` is given it receives d(loss)/d(logits).
double batch_loss(const std::array<Tensor, 3>& logits, std::span<const RelPoseParam> gt,
                  Parameterization p, std::array<Tensor, 3>* grads);

/// Stacks images into a (B, 3, size, size) tensor, resizing bilinearly.
Tensor images_to_tensor(std::span<const Image> imgs, int size);
Tensor image_to_tensor(const Image& img, int size);

/// What the optimization loop drives: parameters, a fused forward/backward
/// step and a JSON description stored in checkpoints.
class Trainable {
 public:
  virtual ~Trainable() = default;
  virtual std::vector<nn::Param*> parameters() = 0;
  virtual std::vector<nn::Buffer*> buffers() = 0;
  /// Training forward and backward on one batch; accumulates parameter
  /// gradients and returns the batch loss.
  virtual double train_step(const Tensor& img1, const Tensor& img2,
                            std::span<const RelPoseParam> labels) = 0;
  virtual std::string kind() const = 0;
  /// Model config and input normalization.
  virtual nlohmann::json describe() const = 0;

  void zero_grad();
};

/**
 * @brief Siamese correlation-volume rotation classifier.
 *
 * One encoder is applied to both images; their features are correlated into
 * a 4D volume, flattened to (h*w, h, w) and fed to three independent decoder
 * heads that each output 360 logits.
 */
class RotationNet : public Trainable {
 public:
  explicit RotationNet(const ModelConfig& cfg);

  const ModelConfig& config() const { return cfg_; }
  const InputNormalization& normalization() const { return norm_; }
  void set_normalization(const InputNormalization& n) { norm_ = n; }

  /// Training pass on (B, 3, S, S) images in [0, 1]; logits are (B, bins).
  std::array<Tensor, 3> forward(const Tensor& img1, const Tensor& img2);
  /// Inference pass; const and safe for concurrent callers.
  std::array<Tensor, 3> infer(const Tensor& img1, const Tensor& img2) const;
  /// Backpropagates logit gradients from the last forward(); optionally
  /// returns gradients w.r.t. the input images.
  void backward(const std::array<Tensor, 3>& dlogits, Tensor* dimg1 = nullptr,
                Tensor* dimg2 = nullptr);

  FeatureMap encode(const Image& img) const;
  Prediction predict(const Image& img1, const Image& img2,
                     Decoding d = Decoding::Argmax) const;
  std::vector<Prediction> predict_batch(const Tensor& img1, const Tensor& img2,
                                        Decoding d = Decoding::Argmax) const;

  std::vector<nn::Param*> parameters() override;
  std::vector<nn::Buffer*> buffers() override;
  double train_step(const Tensor& img1, const Tensor& img2,
                    std::span<const RelPoseParam> labels) override;
  std::string kind() const override { return "rotation"; }
  nlohmann::json describe() const override;
  std::size_t parameter_count() const;

 private:
  Tensor normalize(const Tensor& img) const;
  Tensor decoder_input(const Tensor& f1, const Tensor& f2) const;

  ModelConfig cfg_;
  InputNormalization norm_;
  Encoder encoder_;
  std::array<DecoderHead, 3> heads_;

  // Training caches.
  int batch_ = 0;
  Tensor feat_raw_, feat1_, feat2_;
};

/// Hand-summed parameter count of a configuration (no network allocated).
std::size_t expected_parameter_count(const ModelConfig& cfg);
std::size_t parameter_count(const RotationNet& net);

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

inline constexpr int kCheckpointVersion = 1;

struct NamedArray {
  std::string name;
  std::vector<double> values;
};

/// Versioned binary container: magic, version, JSON header, raw float64 arrays.
struct Checkpoint {
  int version = kCheckpointVersion;
  std::string kind;          // "rotation" or "reg6d"
  nlohmann::json header;     // model config, normalization, train config, ...
  std::vector<NamedArray> params;
  std::vector<NamedArray> buffers;
  std::vector<NamedArray> optimizer;  // Adam first/second moments
  std::int64_t iteration = 0;
  std::uint64_t seed = 0;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck);
/// Throws VersionMismatch for another container version.
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::vector<NamedArray> snapshot(std::span<nn::Param* const> params);
std::vector<NamedArray> snapshot(std::span<nn::Buffer* const> buffers);
/// Copies values by name; throws when a name is missing or a size differs.
void restore(std::span<nn::Param* const> params, const std::vector<NamedArray>& values);
void restore(std::span<nn::Buffer* const> buffers, const std::vector<NamedArray>& values);

/// Parameters, buffers and description of a model; no optimizer state.
Checkpoint make_checkpoint(Trainable& model);
/// Rebuilds a network from a rotation checkpoint.
RotationNet rotation_net_from_checkpoint(const Checkpoint& ck);

}  // namespace relrot
