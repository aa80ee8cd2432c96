#include "wpcm/polynomial.hpp"

#include "wpcm/errors.hpp"

#include <string>

namespace wpcm {

std::string_view to_string(Basis b) {
  return b == Basis::Monomial ? "monomial" : "chebyshev";
}

Basis basis_from_string(std::string_view s) {
  if (s == "monomial") return Basis::Monomial;
  if (s == "chebyshev") return Basis::Chebyshev;
  throw ConfigError("unknown polynomial basis '" + std::string(s) + "'");
}

Polynomial::Polynomial(Basis basis, std::vector<double> coeffs)
    : basis_(basis), coeffs_(std::move(coeffs)) {}

double Polynomial::operator()(double x) const {
  if (coeffs_.empty()) return 0.0;
  if (basis_ == Basis::Monomial) {
    double acc = 0.0;
    for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) acc = acc * x + *it;
    return acc;
  }
  // Clenshaw recurrence on t = 2x - 1.
  const double t = 2.0 * x - 1.0;
  double b1 = 0.0, b2 = 0.0;
  for (std::size_t k = coeffs_.size() - 1; k >= 1; --k) {
    const double b0 = coeffs_[k] + 2.0 * t * b1 - b2;
    b2 = b1;
    b1 = b0;
  }
  return coeffs_[0] + t * b1 - b2;
}

Polynomial Polynomial::derivative() const {
  const std::size_t n = coeffs_.size();
  if (n <= 1) return {basis_, {0.0}};
  std::vector<double> d(n - 1, 0.0);
  if (basis_ == Basis::Monomial) {
    for (std::size_t k = 1; k < n; ++k) d[k - 1] = static_cast<double>(k) * coeffs_[k];
    return {basis_, std::move(d)};
  }
  // d/dt of a Chebyshev series (c'_{k-1} = c'_{k+1} + 2k c_k, halved at k = 0),
  // then the chain-rule factor dt/dx = 2.
  const std::size_t deg = n - 1;
  std::vector<double> dt(n + 1, 0.0);
  for (std::size_t k = deg; k >= 1; --k)
    dt[k - 1] = dt[k + 1] + 2.0 * static_cast<double>(k) * coeffs_[k];
  dt[0] *= 0.5;
  for (std::size_t k = 0; k < deg; ++k) d[k] = 2.0 * dt[k];
  return {basis_, std::move(d)};
}

Polynomial Polynomial::to_monomial() const {
  if (basis_ == Basis::Monomial) return *this;
  const std::size_t n = coeffs_.size();
  // Monomial coefficients (in t) of T_k, built by T_{k+1} = 2t T_k - T_{k-1}.
  std::vector<double> in_t(n, 0.0);
  std::vector<double> prev(n, 0.0), cur(n, 0.0);
  prev[0] = 1.0;  // T_0
  if (n > 1) cur[1] = 1.0;  // T_1
  for (std::size_t k = 0; k < n; ++k) {
    const std::vector<double>& tk = k == 0 ? prev : cur;
    for (std::size_t i = 0; i < n; ++i) in_t[i] += coeffs_[k] * tk[i];
    if (k >= 1 && k + 1 < n) {
      std::vector<double> next(n, 0.0);
      for (std::size_t i = 0; i + 1 < n; ++i) next[i + 1] += 2.0 * cur[i];
      for (std::size_t i = 0; i < n; ++i) next[i] -= prev[i];
      prev = std::move(cur);
      cur = std::move(next);
    }
  }
  // Substitute t = 2x - 1 via Horner over polynomials in x.
  std::vector<double> out(1, 0.0);
  for (std::size_t k = n; k-- > 0;) {
    std::vector<double> next(out.size() + 1, 0.0);
    for (std::size_t i = 0; i < out.size(); ++i) {
      next[i + 1] += 2.0 * out[i];
      next[i] -= out[i];
    }
    next[0] += in_t[k];
    out = std::move(next);
  }
  out.resize(n);
  return {Basis::Monomial, std::move(out)};
}

void Polynomial::basis_row(Basis basis, double x, std::span<double> out) {
  if (out.empty()) return;
  if (basis == Basis::Monomial) {
    double p = 1.0;
    for (double& v : out) {
      v = p;
      p *= x;
    }
    return;
  }
  const double t = 2.0 * x - 1.0;
  out[0] = 1.0;
  if (out.size() > 1) out[1] = t;
  for (std::size_t k = 2; k < out.size(); ++k) out[k] = 2.0 * t * out[k - 1] - out[k - 2];
}

}  // namespace wpcm
