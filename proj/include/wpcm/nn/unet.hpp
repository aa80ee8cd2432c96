#pragma once

#include "wpcm/nn/layers.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace wpcm::nn {

struct NetworkConfig {
  int depth = 4;
  int base_channels = 64;
  bool skip_connections = true;
  int in_channels = 3;
  int out_channels = 3;

  int channels_at(int level) const { return base_channels << level; }
  /// Spatial sizes must be multiples of this.
  int size_multiple() const { return 1 << depth; }
  void validate() const;
  bool operator==(const NetworkConfig&) const = default;
};

void to_json(nlohmann::json& j, const NetworkConfig& c);
void from_json(const nlohmann::json& j, NetworkConfig& c);

template <typename T>
class ConvBlock {
 public:
  ConvBlock() = default;
  ConvBlock(int in_ch, int out_ch, const std::string& name);

  void init(Rng& rng);
  const Tensor<T>& forward(const Tensor<T>& x, bool training);
  /// `gy` is consumed. Writes dL/dx into *gx when non-null.
  void backward(const Tensor<T>& x, Tensor<T>& gy, Tensor<T>* gx);
  const Tensor<T>& output() const { return h2_; }
  /// Folds the ReLU on/off pattern of the last forward into `hash`.
  void hash_pattern(std::uint64_t& hash) const;

  void collect(std::vector<Param<T>*>& params, std::vector<std::pair<std::string, std::vector<T>*>>& buffers);

 private:
  std::string name_;
  Conv2d<T> conv1_, conv2_;
  BatchNormRelu<T> bn1_, bn2_;
  Tensor<T> a1_, h1_, a2_, h2_, g_h1_;
};

/// Encoder/decoder image-to-image network. With skip connections it is a
/// U-net; without them, a plain convolutional autoencoder.
template <typename T>
class UNet {
 public:
  explicit UNet(const NetworkConfig& cfg);
  UNet(const UNet&) = delete;
  UNet& operator=(const UNet&) = delete;

  void init(std::uint64_t seed);
  const Tensor<T>& forward(const Tensor<T>& x, bool training);
  /// Backpropagates dL/d(output) from the last training forward. Parameter
  /// gradients accumulate; the input gradient is written when gx is non-null.
  void backward(const Tensor<T>& gy, Tensor<T>* gx = nullptr);

  const NetworkConfig& config() const { return cfg_; }
  const std::vector<Param<T>*>& parameters() const { return params_; }
  /// Non-trainable state (normalization running statistics).
  const std::vector<std::pair<std::string, std::vector<T>*>>& buffers() const { return buffers_; }
  std::size_t parameter_count() const;
  void zero_grad();
  /// Fingerprint of every ReLU mask and pooling choice of the last forward.
  /// Equal fingerprints mean the network is on the same linear piece.
  std::uint64_t activation_pattern() const;

 private:
  NetworkConfig cfg_;
  std::vector<ConvBlock<T>> enc_, dec_;
  std::vector<MaxPool2<T>> pool_;
  std::vector<ConvTranspose2<T>> up_;
  Conv2d<T> head_;

  const Tensor<T>* input_ = nullptr;
  std::vector<Tensor<T>> pooled_, upped_, cat_;
  Tensor<T> out_;
  std::vector<Param<T>*> params_;
  std::vector<std::pair<std::string, std::vector<T>*>> buffers_;
};

extern template class ConvBlock<float>;
extern template class ConvBlock<double>;
extern template class UNet<float>;
extern template class UNet<double>;

}  // namespace wpcm::nn
