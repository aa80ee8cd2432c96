#pragma once

#include "wpcm/nn/tensor.hpp"
#include "wpcm/rng.hpp"

#include <algorithm>
#include <string>
#include <vector>

namespace wpcm::nn {

/// A trainable array and its gradient accumulator.
template <typename T>
struct Param {
  std::string name;
  std::vector<T> value;
  std::vector<T> grad;

  void resize(std::size_t n) {
    value.assign(n, T(0));
    grad.assign(n, T(0));
  }
  void zero_grad() { std::fill(grad.begin(), grad.end(), T(0)); }
};

/// Square convolution, stride 1, "same" zero padding (kernel 1 or 3).
template <typename T>
class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(int in_ch, int out_ch, int kernel, bool bias, const std::string& name);

  void init(Rng& rng);
  void forward(const Tensor<T>& x, Tensor<T>& y) const;
  /// Accumulates parameter gradients; writes dL/dx into *gx when non-null.
  void backward(const Tensor<T>& x, const Tensor<T>& gy, Tensor<T>* gx);

  int in_channels() const { return in_; }
  int out_channels() const { return out_; }
  Param<T>& weight() { return weight_; }
  Param<T>& bias() { return bias_; }
  bool has_bias() const { return has_bias_; }

 private:
  int in_ = 0, out_ = 0, k_ = 3;
  bool has_bias_ = false;
  Param<T> weight_;  // [out][in * k * k]
  Param<T> bias_;    // [out]
};

/// Per-channel batch normalization fused with the following ReLU.
/// Batch statistics while training, running statistics otherwise.
template <typename T>
class BatchNormRelu {
 public:
  BatchNormRelu() = default;
  BatchNormRelu(int channels, const std::string& name);

  /// `x` holds the pre-normalization input and is overwritten with the
  /// normalized values x_hat; `y` receives relu(gamma * x_hat + beta).
  void forward(Tensor<T>& x, Tensor<T>& y, bool training);
  /// `gy` enters as dL/dy and leaves as dL/dx. Requires a training forward.
  void backward(const Tensor<T>& x_hat, const Tensor<T>& y, Tensor<T>& gy);

  Param<T>& gamma() { return gamma_; }
  Param<T>& beta() { return beta_; }
  std::vector<T>& running_mean() { return running_mean_; }
  std::vector<T>& running_var() { return running_var_; }

  T momentum = T(0.1);
  T eps = T(1e-5);

 private:
  int c_ = 0;
  Param<T> gamma_, beta_;
  std::vector<T> running_mean_, running_var_;
  std::vector<T> batch_invstd_;  // saved by the last training forward
};

/// 2x2 max pooling, stride 2.
template <typename T>
class MaxPool2 {
 public:
  void forward(const Tensor<T>& x, Tensor<T>& y);
  void backward(const Tensor<T>& gy, Tensor<T>& gx) const;
  const std::vector<unsigned char>& argmax() const { return argmax_; }

 private:
  int in_n_ = 0, in_c_ = 0, in_h_ = 0, in_w_ = 0;
  std::vector<unsigned char> argmax_;  // offset 0..3 inside each window
};

/// 2x2 transposed convolution, stride 2 (doubles height and width).
template <typename T>
class ConvTranspose2 {
 public:
  ConvTranspose2() = default;
  ConvTranspose2(int in_ch, int out_ch, const std::string& name);

  void init(Rng& rng);
  void forward(const Tensor<T>& x, Tensor<T>& y) const;
  void backward(const Tensor<T>& x, const Tensor<T>& gy, Tensor<T>& gx);

  Param<T>& weight() { return weight_; }
  Param<T>& bias() { return bias_; }

 private:
  int in_ = 0, out_ = 0;
  Param<T> weight_;  // [in][out * 4]
  Param<T> bias_;    // [out]
};

}  // namespace wpcm::nn
