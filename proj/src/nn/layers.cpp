#include "wpcm/nn/layers.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace wpcm::nn {

namespace {

template <typename T>
using MatR = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapR = Eigen::Map<MatR<T>>;
template <typename T>
using CMapR = Eigen::Map<const MatR<T>>;

// col[(ci * 9 + ky * 3 + kx)][y * w + x] = x[ci][y + ky - 1][x + kx - 1] (zero outside).
template <typename T>
void im2col3(const T* src, int c, int h, int w, T* col) {
  const std::size_t hw = static_cast<std::size_t>(h) * w;
  for (int ci = 0; ci < c; ++ci) {
    const T* plane = src + ci * hw;
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        T* dst = col + (static_cast<std::size_t>(ci) * 9 + ky * 3 + kx) * hw;
        const int dy = ky - 1, dx = kx - 1;
        const int x0 = std::max(0, -dx), x1 = std::min(w, w - dx);
        for (int y = 0; y < h; ++y) {
          T* d = dst + static_cast<std::size_t>(y) * w;
          const int sy = y + dy;
          if (sy < 0 || sy >= h) {
            std::fill(d, d + w, T(0));
            continue;
          }
          const T* s = plane + static_cast<std::size_t>(sy) * w;
          std::fill(d, d + x0, T(0));
          std::copy(s + x0 + dx, s + x1 + dx, d + x0);
          std::fill(d + x1, d + w, T(0));
        }
      }
    }
  }
}

// Adjoint of im2col3: accumulates col back into dst.
template <typename T>
void col2im3(const T* col, int c, int h, int w, T* dst) {
  const std::size_t hw = static_cast<std::size_t>(h) * w;
  for (int ci = 0; ci < c; ++ci) {
    T* plane = dst + ci * hw;
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        const T* src = col + (static_cast<std::size_t>(ci) * 9 + ky * 3 + kx) * hw;
        const int dy = ky - 1, dx = kx - 1;
        const int x0 = std::max(0, -dx), x1 = std::min(w, w - dx);
        for (int y = 0; y < h; ++y) {
          const int sy = y + dy;
          if (sy < 0 || sy >= h) continue;
          const T* s = src + static_cast<std::size_t>(y) * w;
          T* d = plane + static_cast<std::size_t>(sy) * w;
          for (int x = x0; x < x1; ++x) d[x + dx] += s[x];
        }
      }
    }
  }
}

template <typename T>
std::vector<T>& scratch(std::size_t n) {
  thread_local std::vector<T> buf;
  if (buf.size() < n) buf.resize(n);
  return buf;
}

template <typename T>
void fill_normal(std::vector<T>& v, double stddev, Rng& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  for (T& x : v) x = static_cast<T>(dist(rng));
}

}  // namespace

// ---------------------------------------------------------------- Conv2d

template <typename T>
Conv2d<T>::Conv2d(int in_ch, int out_ch, int kernel, bool bias, const std::string& name)
    : in_(in_ch), out_(out_ch), k_(kernel), has_bias_(bias) {
  if (kernel != 1 && kernel != 3) throw std::invalid_argument("Conv2d: kernel must be 1 or 3");
  weight_.name = name + ".weight";
  weight_.resize(static_cast<std::size_t>(out_) * in_ * k_ * k_);
  bias_.name = name + ".bias";
  bias_.resize(has_bias_ ? out_ : 0);
}

template <typename T>
void Conv2d<T>::init(Rng& rng) {
  fill_normal(weight_.value, std::sqrt(2.0 / (in_ * k_ * k_)), rng);
  std::fill(bias_.value.begin(), bias_.value.end(), T(0));
}

template <typename T>
void Conv2d<T>::forward(const Tensor<T>& x, Tensor<T>& y) const {
  if (x.c != in_) throw std::invalid_argument("Conv2d: channel mismatch");
  y.resize(x.n, out_, x.h, x.w);
  const Eigen::Index hw = static_cast<Eigen::Index>(x.plane());
  const Eigen::Index kk = static_cast<Eigen::Index>(in_) * k_ * k_;
  CMapR<T> wmat(weight_.value.data(), out_, kk);
  for (int i = 0; i < x.n; ++i) {
    MapR<T> out(y.sample(i), out_, hw);
    if (k_ == 1) {
      out.noalias() = wmat * CMapR<T>(x.sample(i), in_, hw);
    } else {
      std::vector<T>& col = scratch<T>(static_cast<std::size_t>(kk * hw));
      im2col3(x.sample(i), in_, x.h, x.w, col.data());
      out.noalias() = wmat * CMapR<T>(col.data(), kk, hw);
    }
    if (has_bias_)
      for (int o = 0; o < out_; ++o) out.row(o).array() += bias_.value[o];
  }
}

template <typename T>
void Conv2d<T>::backward(const Tensor<T>& x, const Tensor<T>& gy, Tensor<T>* gx) {
  const Eigen::Index hw = static_cast<Eigen::Index>(x.plane());
  const Eigen::Index kk = static_cast<Eigen::Index>(in_) * k_ * k_;
  CMapR<T> wmat(weight_.value.data(), out_, kk);
  MapR<T> gw(weight_.grad.data(), out_, kk);
  if (gx != nullptr) gx->resize(x.n, x.c, x.h, x.w);
  for (int i = 0; i < x.n; ++i) {
    CMapR<T> g(gy.sample(i), out_, hw);
    if (has_bias_)
      for (int o = 0; o < out_; ++o) bias_.grad[o] += g.row(o).sum();
    if (k_ == 1) {
      CMapR<T> xin(x.sample(i), in_, hw);
      gw.noalias() += g * xin.transpose();
      if (gx != nullptr) MapR<T>(gx->sample(i), in_, hw).noalias() = wmat.transpose() * g;
      continue;
    }
    std::vector<T>& col = scratch<T>(static_cast<std::size_t>(kk * hw));
    im2col3(x.sample(i), in_, x.h, x.w, col.data());
    gw.noalias() += g * CMapR<T>(col.data(), kk, hw).transpose();
    if (gx != nullptr) {
      MapR<T> gcol(col.data(), kk, hw);
      gcol.noalias() = wmat.transpose() * g;
      col2im3(col.data(), in_, x.h, x.w, gx->sample(i));
    }
  }
}

// ---------------------------------------------------------- BatchNormRelu

template <typename T>
BatchNormRelu<T>::BatchNormRelu(int channels, const std::string& name) : c_(channels) {
  gamma_.name = name + ".gamma";
  gamma_.resize(c_);
  std::fill(gamma_.value.begin(), gamma_.value.end(), T(1));
  beta_.name = name + ".beta";
  beta_.resize(c_);
  running_mean_.assign(c_, T(0));
  running_var_.assign(c_, T(1));
  batch_invstd_.assign(c_, T(1));
}

template <typename T>
void BatchNormRelu<T>::forward(Tensor<T>& x, Tensor<T>& y, bool training) {
  if (x.c != c_) throw std::invalid_argument("BatchNormRelu: channel mismatch");
  y.resize(x.n, x.c, x.h, x.w);
  const std::size_t plane = x.plane();
  const double count = static_cast<double>(plane) * x.n;
  for (int ch = 0; ch < c_; ++ch) {
    double mean, invstd;
    if (training) {
      double s = 0.0, s2 = 0.0;
      for (int i = 0; i < x.n; ++i) {
        const T* p = x.channel(i, ch);
        for (std::size_t k = 0; k < plane; ++k) {
          s += p[k];
          s2 += static_cast<double>(p[k]) * p[k];
        }
      }
      mean = s / count;
      const double var = std::max(0.0, s2 / count - mean * mean);
      invstd = 1.0 / std::sqrt(var + static_cast<double>(eps));
      batch_invstd_[ch] = static_cast<T>(invstd);
      const double unbiased = count > 1.0 ? var * count / (count - 1.0) : var;
      running_mean_[ch] = static_cast<T>((1.0 - momentum) * running_mean_[ch] + momentum * mean);
      running_var_[ch] = static_cast<T>((1.0 - momentum) * running_var_[ch] + momentum * unbiased);
    } else {
      mean = running_mean_[ch];
      invstd = 1.0 / std::sqrt(static_cast<double>(running_var_[ch]) + static_cast<double>(eps));
    }
    const T m = static_cast<T>(mean), is = static_cast<T>(invstd);
    const T g = gamma_.value[ch], b = beta_.value[ch];
    for (int i = 0; i < x.n; ++i) {
      T* p = x.channel(i, ch);
      T* q = y.channel(i, ch);
      for (std::size_t k = 0; k < plane; ++k) {
        const T xh = (p[k] - m) * is;
        p[k] = xh;
        const T v = g * xh + b;
        q[k] = v > T(0) ? v : T(0);
      }
    }
  }
}

template <typename T>
void BatchNormRelu<T>::backward(const Tensor<T>& x_hat, const Tensor<T>& y, Tensor<T>& gy) {
  const std::size_t plane = x_hat.plane();
  const double count = static_cast<double>(plane) * x_hat.n;
  for (int ch = 0; ch < c_; ++ch) {
    double sum_g = 0.0, sum_gx = 0.0;
    for (int i = 0; i < x_hat.n; ++i) {
      const T* xh = x_hat.channel(i, ch);
      const T* out = y.channel(i, ch);
      T* g = gy.channel(i, ch);
      for (std::size_t k = 0; k < plane; ++k) {
        if (!(out[k] > T(0))) g[k] = T(0);
        sum_g += g[k];
        sum_gx += static_cast<double>(g[k]) * xh[k];
      }
    }
    gamma_.grad[ch] += static_cast<T>(sum_gx);
    beta_.grad[ch] += static_cast<T>(sum_g);
    // dx = gamma * invstd / M * (M * g - sum(g) - x_hat * sum(g * x_hat))
    const T scale = static_cast<T>(gamma_.value[ch] * batch_invstd_[ch]);
    const T mean_g = static_cast<T>(sum_g / count);
    const T mean_gx = static_cast<T>(sum_gx / count);
    for (int i = 0; i < x_hat.n; ++i) {
      const T* xh = x_hat.channel(i, ch);
      T* g = gy.channel(i, ch);
      for (std::size_t k = 0; k < plane; ++k) g[k] = scale * (g[k] - mean_g - xh[k] * mean_gx);
    }
  }
}

// --------------------------------------------------------------- MaxPool2

template <typename T>
void MaxPool2<T>::forward(const Tensor<T>& x, Tensor<T>& y) {
  if (x.h % 2 != 0 || x.w % 2 != 0) throw std::invalid_argument("MaxPool2: odd spatial size");
  in_n_ = x.n;
  in_c_ = x.c;
  in_h_ = x.h;
  in_w_ = x.w;
  const int oh = x.h / 2, ow = x.w / 2;
  y.resize(x.n, x.c, oh, ow);
  argmax_.resize(y.size());
  std::size_t o = 0;
  for (int i = 0; i < x.n; ++i) {
    for (int ch = 0; ch < x.c; ++ch) {
      const T* p = x.channel(i, ch);
      T* q = y.channel(i, ch);
      for (int r = 0; r < oh; ++r) {
        for (int c = 0; c < ow; ++c, ++o) {
          const T* base = p + static_cast<std::size_t>(2 * r) * x.w + 2 * c;
          const T v[4] = {base[0], base[1], base[x.w], base[x.w + 1]};
          unsigned char best = 0;
          for (unsigned char k = 1; k < 4; ++k)
            if (v[k] > v[best]) best = k;
          q[static_cast<std::size_t>(r) * ow + c] = v[best];
          argmax_[o] = best;
        }
      }
    }
  }
}

template <typename T>
void MaxPool2<T>::backward(const Tensor<T>& gy, Tensor<T>& gx) const {
  gx.resize(in_n_, in_c_, in_h_, in_w_);
  const int oh = in_h_ / 2, ow = in_w_ / 2;
  std::size_t o = 0;
  for (int i = 0; i < in_n_; ++i) {
    for (int ch = 0; ch < in_c_; ++ch) {
      const T* g = gy.channel(i, ch);
      T* d = gx.channel(i, ch);
      for (int r = 0; r < oh; ++r) {
        for (int c = 0; c < ow; ++c, ++o) {
          const int k = argmax_[o];
          const int rr = 2 * r + (k >> 1), cc = 2 * c + (k & 1);
          d[static_cast<std::size_t>(rr) * in_w_ + cc] += g[static_cast<std::size_t>(r) * ow + c];
        }
      }
    }
  }
}

// --------------------------------------------------------- ConvTranspose2

template <typename T>
ConvTranspose2<T>::ConvTranspose2(int in_ch, int out_ch, const std::string& name)
    : in_(in_ch), out_(out_ch) {
  weight_.name = name + ".weight";
  weight_.resize(static_cast<std::size_t>(in_) * out_ * 4);
  bias_.name = name + ".bias";
  bias_.resize(out_);
}

template <typename T>
void ConvTranspose2<T>::init(Rng& rng) {
  fill_normal(weight_.value, std::sqrt(2.0 / in_), rng);
  std::fill(bias_.value.begin(), bias_.value.end(), T(0));
}

template <typename T>
void ConvTranspose2<T>::forward(const Tensor<T>& x, Tensor<T>& y) const {
  if (x.c != in_) throw std::invalid_argument("ConvTranspose2: channel mismatch");
  const int h = x.h, w = x.w;
  const Eigen::Index hw = static_cast<Eigen::Index>(x.plane());
  y.resize(x.n, out_, 2 * h, 2 * w);
  CMapR<T> wmat(weight_.value.data(), in_, static_cast<Eigen::Index>(out_) * 4);
  std::vector<T>& zbuf = scratch<T>(static_cast<std::size_t>(out_) * 4 * hw);
  MapR<T> z(zbuf.data(), static_cast<Eigen::Index>(out_) * 4, hw);
  for (int i = 0; i < x.n; ++i) {
    z.noalias() = wmat.transpose() * CMapR<T>(x.sample(i), in_, hw);
    for (int o = 0; o < out_; ++o) {
      T* dst = y.channel(i, o);
      const T b = bias_.value[o];
      for (int k = 0; k < 4; ++k) {
        const int a = k >> 1, bb = k & 1;
        const T* src = zbuf.data() + (static_cast<std::size_t>(o) * 4 + k) * hw;
        for (int r = 0; r < h; ++r)
          for (int c = 0; c < w; ++c)
            dst[static_cast<std::size_t>(2 * r + a) * (2 * w) + 2 * c + bb] =
                src[static_cast<std::size_t>(r) * w + c] + b;
      }
    }
  }
}

template <typename T>
void ConvTranspose2<T>::backward(const Tensor<T>& x, const Tensor<T>& gy, Tensor<T>& gx) {
  const int h = x.h, w = x.w;
  const Eigen::Index hw = static_cast<Eigen::Index>(x.plane());
  gx.resize(x.n, x.c, x.h, x.w);
  CMapR<T> wmat(weight_.value.data(), in_, static_cast<Eigen::Index>(out_) * 4);
  MapR<T> gw(weight_.grad.data(), in_, static_cast<Eigen::Index>(out_) * 4);
  std::vector<T>& zbuf = scratch<T>(static_cast<std::size_t>(out_) * 4 * hw);
  MapR<T> gz(zbuf.data(), static_cast<Eigen::Index>(out_) * 4, hw);
  for (int i = 0; i < x.n; ++i) {
    for (int o = 0; o < out_; ++o) {
      const T* src = gy.channel(i, o);
      double bsum = 0.0;
      for (int k = 0; k < 4; ++k) {
        const int a = k >> 1, bb = k & 1;
        T* dst = zbuf.data() + (static_cast<std::size_t>(o) * 4 + k) * hw;
        for (int r = 0; r < h; ++r)
          for (int c = 0; c < w; ++c) {
            const T v = src[static_cast<std::size_t>(2 * r + a) * (2 * w) + 2 * c + bb];
            dst[static_cast<std::size_t>(r) * w + c] = v;
            bsum += v;
          }
      }
      bias_.grad[o] += static_cast<T>(bsum);
    }
    CMapR<T> xin(x.sample(i), in_, hw);
    gw.noalias() += xin * gz.transpose();
    MapR<T>(gx.sample(i), in_, hw).noalias() = wmat * gz;
  }
}

template class Conv2d<float>;
template class Conv2d<double>;
template class BatchNormRelu<float>;
template class BatchNormRelu<double>;
template class MaxPool2<float>;
template class MaxPool2<double>;
template class ConvTranspose2<float>;
template class ConvTranspose2<double>;

}  // namespace wpcm::nn
