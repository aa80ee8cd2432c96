#pragma once

#include "wpcm/nn/unet.hpp"
#include "wpcm/raster.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace wpcm {

using nn::NetworkConfig;

enum class LossKind { Mse, L1, SmoothL1 };

std::string to_string(LossKind k);
LossKind loss_from_string(const std::string& s);

/// Mean-reduced loss over every channel and pixel.
double loss(const WpcImage& pred, const WpcImage& target, LossKind kind);

struct TrainConfig {
  LossKind loss = LossKind::Mse;
  int n_iter = 50;
  int batch_size = 8;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;

  void validate() const;
};

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

struct TrainingPair {
  WpcImage input;   // scattered WPC image
  WpcImage target;  // neat WPC image
};

/// A network plus its bookkeeping. Inference calls are serialized internally,
/// so one model may be shared between threads.
class Model {
 public:
  explicit Model(const NetworkConfig& cfg, std::uint64_t seed = 0);

  const NetworkConfig& config() const { return net_->config(); }
  bool trained() const { return trained_; }
  void set_trained(bool t) { trained_ = t; }
  nn::UNet<float>& net() { return *net_; }
  const nn::UNet<float>& net() const { return *net_; }
  std::mutex& mutex() const { return *mutex_; }
  /// Mutable network access for inference; hold mutex() while using it.
  nn::UNet<float>& engine() const { return *net_; }

 private:
  std::unique_ptr<nn::UNet<float>> net_;
  std::unique_ptr<std::mutex> mutex_;
  bool trained_ = false;
};

/// Inference-mode forward pass (running normalization statistics, no clamp).
WpcImage forward(const Model& model, const WpcImage& img);

struct EpochReport {
  int epoch = 0;  // 1-based
  double loss = 0.0;
  double seconds = 0.0;
};

struct TrainResult {
  std::vector<double> epoch_loss;
  double seconds = 0.0;
};

using EpochCallback = std::function<void(const EpochReport&)>;

TrainResult train(Model& model, const std::vector<TrainingPair>& data, const TrainConfig& cfg,
                  const EpochCallback& on_epoch = {});

/// Produces training pair i on demand, so large datasets need not be resident.
using PairSource = std::function<TrainingPair(std::size_t)>;

TrainResult train(Model& model, std::size_t n_pairs, const PairSource& source, const TrainConfig& cfg,
                  const EpochCallback& on_epoch = {});

/// Forward pass clamped to [0, 1].
WpcImage infer(const Model& model, const WpcImage& img);
std::vector<WpcImage> infer(const Model& model, const std::vector<WpcImage>& imgs);

void save_model(const Model& model, const std::string& path);
Model load_model(const std::string& path);
/// Also checks the stored architecture against `expected`.
Model load_model(const std::string& path, const NetworkConfig& expected);

void write_loss_history(const std::string& path, const std::vector<double>& epoch_loss);

}  // namespace wpcm
