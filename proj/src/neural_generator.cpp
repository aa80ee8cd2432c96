#include "wpcm/neural_generator.hpp"

#include "wpcm/errors.hpp"
#include "wpcm/io.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

namespace wpcm {

using nn::Tensor;

std::string to_string(LossKind k) {
  switch (k) {
    case LossKind::Mse: return "mse";
    case LossKind::L1: return "l1";
    case LossKind::SmoothL1: return "smooth_l1";
  }
  return "mse";
}

LossKind loss_from_string(const std::string& s) {
  if (s == "mse") return LossKind::Mse;
  if (s == "l1") return LossKind::L1;
  if (s == "smooth_l1") return LossKind::SmoothL1;
  throw ConfigError("unknown loss '" + s + "' (expected mse, l1 or smooth_l1)");
}

namespace {

double elem_loss(double e, LossKind kind) {
  switch (kind) {
    case LossKind::Mse: return e * e;
    case LossKind::L1: return std::abs(e);
    case LossKind::SmoothL1: return std::abs(e) <= 1.0 ? 0.5 * e * e : std::abs(e) - 0.5;
  }
  return 0.0;
}

double elem_grad(double e, LossKind kind) {
  switch (kind) {
    case LossKind::Mse: return 2.0 * e;
    case LossKind::L1: return e > 0.0 ? 1.0 : (e < 0.0 ? -1.0 : 0.0);
    case LossKind::SmoothL1: return std::abs(e) <= 1.0 ? e : (e > 0.0 ? 1.0 : -1.0);
  }
  return 0.0;
}

void check_same(const WpcImage& a, const WpcImage& b) {
  if (a.height != b.height || a.width != b.width || a.pixels.size() != b.pixels.size())
    throw DomainError("image dimensions differ: " + std::to_string(a.height) + "x" +
                      std::to_string(a.width) + " vs " + std::to_string(b.height) + "x" +
                      std::to_string(b.width));
}

Tensor<float> to_tensor(const std::vector<const WpcImage*>& imgs) {
  const WpcImage& first = *imgs.front();
  Tensor<float> t(static_cast<int>(imgs.size()), 3, first.height, first.width);
  for (std::size_t i = 0; i < imgs.size(); ++i) {
    check_same(first, *imgs[i]);
    std::copy(imgs[i]->pixels.begin(), imgs[i]->pixels.end(), t.sample(static_cast<int>(i)));
  }
  return t;
}

WpcImage from_tensor(const Tensor<float>& t, int i, bool clamp) {
  WpcImage img(t.h, t.w, ImageRole::Generated, 0.0f);
  const float* src = t.sample(i);
  for (std::size_t k = 0; k < img.pixels.size(); ++k)
    img.pixels[k] = clamp ? std::clamp(src[k], 0.0f, 1.0f) : src[k];
  return img;
}

void check_input(const NetworkConfig& cfg, const WpcImage& img) {
  const int m = cfg.size_multiple();
  if (img.height < m || img.width < m || img.height % m != 0 || img.width % m != 0 ||
      img.pixels.size() != static_cast<std::size_t>(3) * img.height * img.width)
    throw DomainError("image " + std::to_string(img.height) + "x" + std::to_string(img.width) +
                      " does not fit the network (3 channels, sides divisible by " +
                      std::to_string(m) + ")");
}

class Adam {
 public:
  Adam(const std::vector<nn::Param<float>*>& params, const TrainConfig& cfg)
      : params_(params), cfg_(cfg) {
    for (const auto* p : params_) {
      m_.emplace_back(p->value.size(), 0.0f);
      v_.emplace_back(p->value.size(), 0.0f);
    }
  }

  void step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, t_);
    const double bc2 = 1.0 - std::pow(cfg_.beta2, t_);
    const float lr = static_cast<float>(cfg_.learning_rate * std::sqrt(bc2) / bc1);
    const float b1 = static_cast<float>(cfg_.beta1), b2 = static_cast<float>(cfg_.beta2);
    const float eps = static_cast<float>(cfg_.adam_eps * std::sqrt(bc2));
    for (std::size_t k = 0; k < params_.size(); ++k) {
      auto& p = *params_[k];
      auto& m = m_[k];
      auto& v = v_[k];
      for (std::size_t i = 0; i < p.value.size(); ++i) {
        const float g = p.grad[i];
        m[i] = b1 * m[i] + (1.0f - b1) * g;
        v[i] = b2 * v[i] + (1.0f - b2) * g * g;
        p.value[i] -= lr * m[i] / (std::sqrt(v[i]) + eps);
      }
    }
  }

 private:
  std::vector<nn::Param<float>*> params_;
  TrainConfig cfg_;
  std::vector<std::vector<float>> m_, v_;
  long long t_ = 0;
};

}  // namespace

double loss(const WpcImage& pred, const WpcImage& target, LossKind kind) {
  check_same(pred, target);
  if (pred.pixels.empty()) return 0.0;
  double s = 0.0;
  for (std::size_t k = 0; k < pred.pixels.size(); ++k)
    s += elem_loss(static_cast<double>(pred.pixels[k]) - target.pixels[k], kind);
  return s / static_cast<double>(pred.pixels.size());
}

void TrainConfig::validate() const {
  if (n_iter < 1) throw ConfigError("n_iter must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
    throw ConfigError("Adam betas must lie in [0, 1)");
  if (!(adam_eps > 0.0)) throw ConfigError("adam_eps must be positive");
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = nlohmann::json{{"loss", to_string(c.loss)},      {"n_iter", c.n_iter},
                     {"batch_size", c.batch_size},      {"learning_rate", c.learning_rate},
                     {"beta1", c.beta1},                {"beta2", c.beta2},
                     {"adam_eps", c.adam_eps},          {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  TrainConfig d;
  c.loss = loss_from_string(j.value("loss", to_string(d.loss)));
  c.n_iter = j.value("n_iter", d.n_iter);
  c.batch_size = j.value("batch_size", d.batch_size);
  c.learning_rate = j.value("learning_rate", d.learning_rate);
  c.beta1 = j.value("beta1", d.beta1);
  c.beta2 = j.value("beta2", d.beta2);
  c.adam_eps = j.value("adam_eps", d.adam_eps);
  c.seed = j.value("seed", d.seed);
  c.validate();
}

Model::Model(const NetworkConfig& cfg, std::uint64_t seed)
    : net_(std::make_unique<nn::UNet<float>>(cfg)), mutex_(std::make_unique<std::mutex>()) {
  net_->init(seed);
}

WpcImage forward(const Model& model, const WpcImage& img) {
  check_input(model.config(), img);
  Tensor<float> x = to_tensor({&img});
  std::lock_guard<std::mutex> lock(model.mutex());
  return from_tensor(model.engine().forward(x, false), 0, false);
}

WpcImage infer(const Model& model, const WpcImage& img) {
  WpcImage out = forward(model, img);
  for (float& v : out.pixels) v = std::clamp(v, 0.0f, 1.0f);
  return out;
}

std::vector<WpcImage> infer(const Model& model, const std::vector<WpcImage>& imgs) {
  std::vector<WpcImage> out;
  out.reserve(imgs.size());
  for (const auto& img : imgs) out.push_back(infer(model, img));
  return out;
}

TrainResult train(Model& model, const std::vector<TrainingPair>& data, const TrainConfig& cfg,
                  const EpochCallback& on_epoch) {
  return train(
      model, data.size(), [&data](std::size_t i) { return data[i]; }, cfg, on_epoch);
}

TrainResult train(Model& model, std::size_t n_pairs, const PairSource& source, const TrainConfig& cfg,
                  const EpochCallback& on_epoch) {
  cfg.validate();
  if (n_pairs == 0) throw ConfigError("training set is empty");

  auto& net = model.net();
  Adam opt(net.parameters(), cfg);
  Rng rng(mix_seed(cfg.seed));
  std::vector<std::size_t> order(n_pairs);
  std::iota(order.begin(), order.end(), std::size_t{0});
  int height = -1, width = -1;

  TrainResult result;
  const auto t_start = std::chrono::steady_clock::now();
  std::lock_guard<std::mutex> lock(model.mutex());
  for (int epoch = 1; epoch <= cfg.n_iter; ++epoch) {
    const auto t_epoch = std::chrono::steady_clock::now();
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      std::vector<TrainingPair> batch;
      batch.reserve(stop - start);
      std::vector<const WpcImage*> xs, ys;
      for (std::size_t k = start; k < stop; ++k) {
        batch.push_back(source(order[k]));
        const TrainingPair& p = batch.back();
        check_input(model.config(), p.input);
        check_same(p.input, p.target);
        if (height < 0) {
          height = p.input.height;
          width = p.input.width;
        } else if (p.input.height != height || p.input.width != width) {
          throw DomainError("training pairs must all share one image size");
        }
      }
      for (const auto& p : batch) {
        xs.push_back(&p.input);
        ys.push_back(&p.target);
      }
      const Tensor<float> x = to_tensor(xs);
      const Tensor<float> y = to_tensor(ys);
      const Tensor<float>& pred = net.forward(x, true);
      Tensor<float> grad(pred.n, pred.c, pred.h, pred.w);
      const double inv_n = 1.0 / static_cast<double>(pred.size());
      double batch_loss = 0.0;
      for (std::size_t k = 0; k < pred.size(); ++k) {
        const double e = static_cast<double>(pred.data[k]) - y.data[k];
        batch_loss += elem_loss(e, cfg.loss);
        grad.data[k] = static_cast<float>(elem_grad(e, cfg.loss) * inv_n);
      }
      batch_loss *= inv_n;
      if (!std::isfinite(batch_loss)) {
        std::ostringstream msg;
        msg << "non-finite " << to_string(cfg.loss) << " loss at epoch " << epoch << ", batch starting at "
            << start << " (learning rate " << cfg.learning_rate << ")";
        throw NonFiniteLoss(msg.str());
      }
      net.zero_grad();
      net.backward(grad);
      opt.step();
      epoch_sum += batch_loss * static_cast<double>(stop - start);
    }
    const double epoch_loss = epoch_sum / static_cast<double>(order.size());
    result.epoch_loss.push_back(epoch_loss);
    if (on_epoch) {
      const double secs =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t_epoch).count();
      on_epoch(EpochReport{epoch, epoch_loss, secs});
    }
  }
  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  model.set_trained(true);
  return result;
}

// ------------------------------------------------------------ checkpoints

namespace {

constexpr char kMagic[8] = {'W', 'P', 'C', 'M', 'C', 'K', 'P', 'T'};
constexpr char kTrailer[4] = {'E', 'N', 'D', '!'};
constexpr std::uint32_t kVersion = 1;

template <typename U>
void put(std::ostream& os, U v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(U));
}

class Reader {
 public:
  Reader(const std::string& path) : path_(path), in_(path, std::ios::binary) {
    if (!in_) throw CorruptFile("cannot open checkpoint " + path);
  }
  void bytes(char* dst, std::size_t n) {
    in_.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n)
      throw CorruptFile("checkpoint " + path_ + " is truncated");
  }
  template <typename U>
  U get() {
    U v;
    bytes(reinterpret_cast<char*>(&v), sizeof(U));
    return v;
  }
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::ifstream in_;
};

struct TensorSlot {
  std::string name;
  std::vector<float>* data;
};

std::vector<TensorSlot> slots(nn::UNet<float>& net) {
  std::vector<TensorSlot> out;
  for (auto* p : net.parameters()) out.push_back({p->name, &p->value});
  for (auto& [name, buf] : net.buffers()) out.push_back({name, buf});
  return out;
}

}  // namespace

void save_model(const Model& model, const std::string& path) {
  std::lock_guard<std::mutex> lock(model.mutex());
  const auto tensors = slots(model.engine());
  nlohmann::json header{{"network", model.config()}, {"trained", model.trained()},
                        {"tensors", tensors.size()}};
  const std::string hs = header.dump();
  atomic_write(
      path,
      [&](std::ostream& os) {
        os.write(kMagic, sizeof(kMagic));
        put<std::uint32_t>(os, kVersion);
        put<std::uint64_t>(os, hs.size());
        os.write(hs.data(), static_cast<std::streamsize>(hs.size()));
        for (const auto& t : tensors) {
          put<std::uint32_t>(os, static_cast<std::uint32_t>(t.name.size()));
          os.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
          put<std::uint64_t>(os, t.data->size());
          os.write(reinterpret_cast<const char*>(t.data->data()),
                   static_cast<std::streamsize>(t.data->size() * sizeof(float)));
        }
        os.write(kTrailer, sizeof(kTrailer));
      },
      true);
}

namespace {

Model read_checkpoint(const std::string& path, const NetworkConfig* expected) {
  Reader r(path);
  char magic[8];
  r.bytes(magic, sizeof(magic));
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw CorruptFile(path + " is not a model checkpoint");
  const auto version = r.get<std::uint32_t>();
  if (version != kVersion)
    throw VersionMismatch("checkpoint version " + std::to_string(version) + ", expected " +
                          std::to_string(kVersion));
  const auto hlen = r.get<std::uint64_t>();
  if (hlen > (1u << 20)) throw CorruptFile("checkpoint header length is implausible");
  std::string hs(hlen, '\0');
  r.bytes(hs.data(), hs.size());
  NetworkConfig cfg;
  bool trained = false;
  try {
    const auto header = nlohmann::json::parse(hs);
    cfg = header.at("network").get<NetworkConfig>();
    trained = header.value("trained", false);
  } catch (const nlohmann::json::exception& e) {
    throw CorruptFile(std::string("checkpoint header is malformed: ") + e.what());
  } catch (const ConfigError& e) {
    throw CorruptFile(std::string("checkpoint header is malformed: ") + e.what());
  }
  if (expected != nullptr && !(cfg == *expected)) {
    throw ArchitectureMismatch("checkpoint architecture " + nlohmann::json(cfg).dump() +
                               " differs from requested " + nlohmann::json(*expected).dump());
  }
  Model model(cfg);
  for (const auto& slot : slots(model.net())) {
    const auto nlen = r.get<std::uint32_t>();
    if (nlen > 4096) throw CorruptFile("checkpoint tensor name length is implausible");
    std::string name(nlen, '\0');
    r.bytes(name.data(), name.size());
    if (name != slot.name) throw CorruptFile("checkpoint tensor '" + name + "' where '" + slot.name + "' was expected");
    const auto count = r.get<std::uint64_t>();
    if (count != slot.data->size())
      throw CorruptFile("checkpoint tensor '" + name + "' has " + std::to_string(count) +
                        " values, expected " + std::to_string(slot.data->size()));
    r.bytes(reinterpret_cast<char*>(slot.data->data()), count * sizeof(float));
  }
  char trailer[4];
  r.bytes(trailer, sizeof(trailer));
  if (std::memcmp(trailer, kTrailer, sizeof(kTrailer)) != 0)
    throw CorruptFile("checkpoint trailer missing");
  model.set_trained(trained);
  return model;
}

}  // namespace

Model load_model(const std::string& path) { return read_checkpoint(path, nullptr); }

Model load_model(const std::string& path, const NetworkConfig& expected) {
  return read_checkpoint(path, &expected);
}

void write_loss_history(const std::string& path, const std::vector<double>& epoch_loss) {
  atomic_write(path, [&](std::ostream& os) {
    os << "epoch,loss\n" << std::setprecision(10);
    for (std::size_t i = 0; i < epoch_loss.size(); ++i) os << (i + 1) << ',' << epoch_loss[i] << '\n';
  });
}

}  // namespace wpcm
