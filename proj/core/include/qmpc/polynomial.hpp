#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "qmpc/field.hpp"

namespace qmpc {

/// Univariate polynomial over a prime field, lowest degree first. Trailing
/// zero coefficients are trimmed, so the zero polynomial has no coefficients
/// and degree -1.
class Polynomial {
 public:
  explicit Polynomial(std::uint64_t modulus) : p_(modulus) {}
  Polynomial(std::uint64_t modulus, std::vector<Fp> coefficients);

  /// Uniformly random polynomial of degree <= degree with the given free
  /// coefficient.
  static Polynomial random_with_constant(const PrimeField& field, Fp constant, int degree,
                                         Rng& rng);

  std::uint64_t modulus() const { return p_; }
  int degree() const { return static_cast<int>(c_.size()) - 1; }
  bool is_zero() const { return c_.empty(); }
  const std::vector<Fp>& coefficients() const { return c_; }
  /// Coefficient i, zero past the degree.
  Fp coefficient(std::size_t i) const { return i < c_.size() ? c_[i] : Fp(0, p_); }

  /// Horner evaluation.
  Fp eval(Fp x) const;

  Polynomial operator+(const Polynomial& o) const;
  Polynomial operator-(const Polynomial& o) const;
  Polynomial operator*(const Polynomial& o) const;
  Polynomial scaled(Fp k) const;

  /// Quotient and remainder of division by a nonzero polynomial.
  std::pair<Polynomial, Polynomial> divmod(const Polynomial& divisor) const;

  friend bool operator==(const Polynomial& a, const Polynomial& b) {
    return a.p_ == b.p_ && a.c_ == b.c_;
  }

 private:
  void trim();

  std::uint64_t p_;
  std::vector<Fp> c_;
};

struct Point {
  Fp x;
  Fp y;
};

/// Unique polynomial of degree < points.size() through the points.
/// Throws DuplicateAbscissa; requires at least one point.
Polynomial lagrange_interpolate(std::span<const Point> points);

/// Coefficients l_i with f(target) = sum_i l_i f(x_i) for every f of degree
/// < xs.size().
std::vector<Fp> lagrange_coefficients(std::span<const Fp> xs, Fp target);

/// Abscissa of the i-th (0-based) position in a committee: i + 1.
inline Fp abscissa(const PrimeField& field, std::size_t position) {
  return field.element(position + 1);
}

}  // namespace qmpc
