#pragma once

#include <span>
#include <string_view>
#include <vector>

namespace wpcm {

/// Coefficient basis of a polynomial on the unit interval.
///
/// `Chebyshev` means the shifted Chebyshev polynomials T_k(2x - 1), which keep
/// high-order least-squares fits on [0, 1] well conditioned.
enum class Basis { Monomial, Chebyshev };

std::string_view to_string(Basis b);
Basis basis_from_string(std::string_view s);

class Polynomial {
 public:
  Polynomial() = default;
  Polynomial(Basis basis, std::vector<double> coeffs);

  static Polynomial monomial(std::vector<double> coeffs) {
    return {Basis::Monomial, std::move(coeffs)};
  }

  double operator()(double x) const;
  Polynomial derivative() const;

  /// Same polynomial re-expressed over x^k. Loses accuracy for high degrees.
  Polynomial to_monomial() const;

  Basis basis() const { return basis_; }
  const std::vector<double>& coeffs() const { return coeffs_; }
  int degree() const { return static_cast<int>(coeffs_.size()) - 1; }
  bool empty() const { return coeffs_.empty(); }

  /// Value of basis function k at x (used to assemble design matrices).
  static void basis_row(Basis basis, double x, std::span<double> out);

 private:
  Basis basis_ = Basis::Monomial;
  std::vector<double> coeffs_;
};

}  // namespace wpcm
