#include "wpcm/nn/unet.hpp"

#include "wpcm/errors.hpp"

#include <algorithm>

namespace wpcm::nn {

void NetworkConfig::validate() const {
  if (depth < 1 || depth > 6) throw ConfigError("network depth must be in [1, 6]");
  if (base_channels < 1) throw ConfigError("base_channels must be >= 1");
  if (in_channels < 1 || out_channels < 1) throw ConfigError("channel counts must be >= 1");
}

void to_json(nlohmann::json& j, const NetworkConfig& c) {
  j = nlohmann::json{{"depth", c.depth},
                     {"base_channels", c.base_channels},
                     {"skip_connections", c.skip_connections},
                     {"in_channels", c.in_channels},
                     {"out_channels", c.out_channels}};
}

void from_json(const nlohmann::json& j, NetworkConfig& c) {
  NetworkConfig d;
  c.depth = j.value("depth", d.depth);
  c.base_channels = j.value("base_channels", d.base_channels);
  c.skip_connections = j.value("skip_connections", d.skip_connections);
  c.in_channels = j.value("in_channels", d.in_channels);
  c.out_channels = j.value("out_channels", d.out_channels);
  c.validate();
}

namespace {

template <typename T>
void concat_channels(const Tensor<T>& a, const Tensor<T>& b, Tensor<T>& out) {
  out.resize(a.n, a.c + b.c, a.h, a.w);
  for (int i = 0; i < a.n; ++i) {
    std::copy(a.sample(i), a.sample(i) + a.sample_size(), out.sample(i));
    std::copy(b.sample(i), b.sample(i) + b.sample_size(), out.sample(i) + a.sample_size());
  }
}

template <typename T>
void split_channels(const Tensor<T>& g, int ca, Tensor<T>& ga, Tensor<T>& gb) {
  ga.resize(g.n, ca, g.h, g.w);
  gb.resize(g.n, g.c - ca, g.h, g.w);
  for (int i = 0; i < g.n; ++i) {
    const T* s = g.sample(i);
    std::copy(s, s + ga.sample_size(), ga.sample(i));
    std::copy(s + ga.sample_size(), s + g.sample_size(), gb.sample(i));
  }
}

template <typename T>
void add_into(Tensor<T>& dst, const Tensor<T>& src) {
  for (std::size_t k = 0; k < dst.size(); ++k) dst.data[k] += src.data[k];
}

}  // namespace

template <typename T>
ConvBlock<T>::ConvBlock(int in_ch, int out_ch, const std::string& name)
    : name_(name),
      conv1_(in_ch, out_ch, 3, false, name + ".conv1"),
      conv2_(out_ch, out_ch, 3, false, name + ".conv2"),
      bn1_(out_ch, name + ".bn1"),
      bn2_(out_ch, name + ".bn2") {}

template <typename T>
void ConvBlock<T>::init(Rng& rng) {
  conv1_.init(rng);
  conv2_.init(rng);
}

template <typename T>
const Tensor<T>& ConvBlock<T>::forward(const Tensor<T>& x, bool training) {
  conv1_.forward(x, a1_);
  bn1_.forward(a1_, h1_, training);
  conv2_.forward(h1_, a2_);
  bn2_.forward(a2_, h2_, training);
  return h2_;
}

template <typename T>
void ConvBlock<T>::backward(const Tensor<T>& x, Tensor<T>& gy, Tensor<T>* gx) {
  bn2_.backward(a2_, h2_, gy);
  conv2_.backward(h1_, gy, &g_h1_);
  bn1_.backward(a1_, h1_, g_h1_);
  conv1_.backward(x, g_h1_, gx);
}

namespace {

void fold(std::uint64_t& hash, unsigned v) {
  hash ^= v;
  hash *= 1099511628211ull;
}

}  // namespace

template <typename T>
void ConvBlock<T>::hash_pattern(std::uint64_t& hash) const {
  for (const T v : h1_.data) fold(hash, v > T(0));
  for (const T v : h2_.data) fold(hash, v > T(0));
}

template <typename T>
void ConvBlock<T>::collect(std::vector<Param<T>*>& params,
                           std::vector<std::pair<std::string, std::vector<T>*>>& buffers) {
  params.push_back(&conv1_.weight());
  params.push_back(&bn1_.gamma());
  params.push_back(&bn1_.beta());
  params.push_back(&conv2_.weight());
  params.push_back(&bn2_.gamma());
  params.push_back(&bn2_.beta());
  buffers.emplace_back(name_ + ".bn1.running_mean", &bn1_.running_mean());
  buffers.emplace_back(name_ + ".bn1.running_var", &bn1_.running_var());
  buffers.emplace_back(name_ + ".bn2.running_mean", &bn2_.running_mean());
  buffers.emplace_back(name_ + ".bn2.running_var", &bn2_.running_var());
}

template <typename T>
UNet<T>::UNet(const NetworkConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  const int d = cfg_.depth;
  enc_.reserve(d + 1);
  enc_.emplace_back(cfg_.in_channels, cfg_.channels_at(0), "enc0");
  for (int i = 1; i <= d; ++i)
    enc_.emplace_back(cfg_.channels_at(i - 1), cfg_.channels_at(i), "enc" + std::to_string(i));
  pool_.resize(d);
  up_.reserve(d);
  dec_.reserve(d);
  for (int i = 0; i < d; ++i) {
    const int c = cfg_.channels_at(i);
    up_.emplace_back(cfg_.channels_at(i + 1), c, "up" + std::to_string(i));
    dec_.emplace_back(cfg_.skip_connections ? 2 * c : c, c, "dec" + std::to_string(i));
  }
  head_ = Conv2d<T>(cfg_.channels_at(0), cfg_.out_channels, 1, true, "head");
  pooled_.resize(d);
  upped_.resize(d);
  cat_.resize(d);

  for (auto& b : enc_) b.collect(params_, buffers_);
  for (int i = 0; i < d; ++i) {
    params_.push_back(&up_[i].weight());
    params_.push_back(&up_[i].bias());
    dec_[i].collect(params_, buffers_);
  }
  params_.push_back(&head_.weight());
  params_.push_back(&head_.bias());
}

template <typename T>
void UNet<T>::init(std::uint64_t seed) {
  Rng rng(seed);
  for (auto& b : enc_) b.init(rng);
  for (int i = 0; i < cfg_.depth; ++i) {
    up_[i].init(rng);
    dec_[i].init(rng);
  }
  head_.init(rng);
  // Start from a blank white canvas.
  std::fill(head_.bias().value.begin(), head_.bias().value.end(), T(1));
}

template <typename T>
const Tensor<T>& UNet<T>::forward(const Tensor<T>& x, bool training) {
  const int m = cfg_.size_multiple();
  if (x.c != cfg_.in_channels || x.h % m != 0 || x.w % m != 0 || x.h < m || x.w < m)
    throw DomainError("network input must have " + std::to_string(cfg_.in_channels) +
                      " channels and spatial size divisible by " + std::to_string(m));
  input_ = &x;
  const int d = cfg_.depth;
  const Tensor<T>* cur = &enc_[0].forward(x, training);
  for (int i = 0; i < d; ++i) {
    pool_[i].forward(*cur, pooled_[i]);
    cur = &enc_[i + 1].forward(pooled_[i], training);
  }
  for (int i = d - 1; i >= 0; --i) {
    up_[i].forward(*cur, upped_[i]);
    if (cfg_.skip_connections) {
      concat_channels(enc_[i].output(), upped_[i], cat_[i]);
      cur = &dec_[i].forward(cat_[i], training);
    } else {
      cur = &dec_[i].forward(upped_[i], training);
    }
  }
  head_.forward(*cur, out_);
  return out_;
}

template <typename T>
void UNet<T>::backward(const Tensor<T>& gy, Tensor<T>* gx) {
  if (input_ == nullptr) throw std::logic_error("UNet::backward before forward");
  const int d = cfg_.depth;
  std::vector<Tensor<T>> g_skip(d);
  Tensor<T> g, g_in, g_up;
  head_.backward(dec_[0].output(), gy, &g);
  for (int i = 0; i < d; ++i) {
    const Tensor<T>& dec_in = cfg_.skip_connections ? cat_[i] : upped_[i];
    dec_[i].backward(dec_in, g, &g_in);
    if (cfg_.skip_connections)
      split_channels(g_in, cfg_.channels_at(i), g_skip[i], g_up);
    else
      g_up = std::move(g_in);
    const Tensor<T>& up_in = i + 1 < d ? dec_[i + 1].output() : enc_[d].output();
    up_[i].backward(up_in, g_up, g);
  }
  for (int i = d; i >= 1; --i) {
    enc_[i].backward(pooled_[i - 1], g, &g_in);
    pool_[i - 1].backward(g_in, g);
    if (cfg_.skip_connections) add_into(g, g_skip[i - 1]);
  }
  enc_[0].backward(*input_, g, gx);
}

template <typename T>
std::size_t UNet<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto* p : params_) n += p->value.size();
  return n;
}

template <typename T>
void UNet<T>::zero_grad() {
  for (auto* p : params_) p->zero_grad();
}

template <typename T>
std::uint64_t UNet<T>::activation_pattern() const {
  std::uint64_t hash = 14695981039346656037ull;
  for (const auto& b : enc_) b.hash_pattern(hash);
  for (const auto& b : dec_) b.hash_pattern(hash);
  for (const auto& p : pool_)
    for (unsigned char a : p.argmax()) fold(hash, a);
  return hash;
}

template class ConvBlock<float>;
template class ConvBlock<double>;
template class UNet<float>;
template class UNet<double>;

}  // namespace wpcm::nn
