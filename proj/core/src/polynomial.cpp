#include "qmpc/polynomial.hpp"

#include <algorithm>
#include <stdexcept>

namespace qmpc {

Polynomial::Polynomial(std::uint64_t modulus, std::vector<Fp> coefficients)
    : p_(modulus), c_(std::move(coefficients)) {
  for (const Fp& c : c_) {
    if (c.modulus() != p_) throw FieldMismatch();
  }
  trim();
}

Polynomial Polynomial::random_with_constant(const PrimeField& field, Fp constant, int degree,
                                            Rng& rng) {
  std::vector<Fp> c;
  c.reserve(static_cast<std::size_t>(std::max(degree, 0)) + 1);
  c.push_back(constant);
  for (int i = 1; i <= degree; ++i) c.push_back(field.sample(rng));
  return Polynomial(field.modulus(), std::move(c));
}

void Polynomial::trim() {
  while (!c_.empty() && c_.back().is_zero()) c_.pop_back();
}

Fp Polynomial::eval(Fp x) const {
  if (x.modulus() != p_) throw FieldMismatch();
  Fp acc(0, p_);
  for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * x + *it;
  return acc;
}

Polynomial Polynomial::operator+(const Polynomial& o) const {
  if (o.p_ != p_) throw FieldMismatch();
  std::vector<Fp> r(std::max(c_.size(), o.c_.size()), Fp(0, p_));
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = coefficient(i) + o.coefficient(i);
  return Polynomial(p_, std::move(r));
}

Polynomial Polynomial::operator-(const Polynomial& o) const {
  if (o.p_ != p_) throw FieldMismatch();
  std::vector<Fp> r(std::max(c_.size(), o.c_.size()), Fp(0, p_));
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = coefficient(i) - o.coefficient(i);
  return Polynomial(p_, std::move(r));
}

Polynomial Polynomial::operator*(const Polynomial& o) const {
  if (o.p_ != p_) throw FieldMismatch();
  if (is_zero() || o.is_zero()) return Polynomial(p_);
  std::vector<Fp> r(c_.size() + o.c_.size() - 1, Fp(0, p_));
  for (std::size_t i = 0; i < c_.size(); ++i) {
    for (std::size_t j = 0; j < o.c_.size(); ++j) r[i + j] += c_[i] * o.c_[j];
  }
  return Polynomial(p_, std::move(r));
}

Polynomial Polynomial::scaled(Fp k) const {
  std::vector<Fp> r = c_;
  for (Fp& c : r) c *= k;
  return Polynomial(p_, std::move(r));
}

std::pair<Polynomial, Polynomial> Polynomial::divmod(const Polynomial& divisor) const {
  if (divisor.p_ != p_) throw FieldMismatch();
  if (divisor.is_zero()) throw DivisionByZero();
  std::vector<Fp> rem = c_;
  const std::size_t dd = divisor.c_.size();
  if (rem.size() < dd) return {Polynomial(p_), *this};
  std::vector<Fp> quot(rem.size() - dd + 1, Fp(0, p_));
  const Fp lead_inv = divisor.c_.back().inverse();
  for (std::size_t k = quot.size(); k-- > 0;) {
    const Fp coef = rem[k + dd - 1] * lead_inv;
    quot[k] = coef;
    if (coef.is_zero()) continue;
    for (std::size_t j = 0; j < dd; ++j) rem[k + j] -= coef * divisor.c_[j];
  }
  rem.resize(dd - 1);
  return {Polynomial(p_, std::move(quot)), Polynomial(p_, std::move(rem))};
}

std::vector<Fp> lagrange_coefficients(std::span<const Fp> xs, Fp target) {
  if (xs.empty()) throw std::invalid_argument("lagrange_coefficients: no abscissas");
  const std::uint64_t p = xs.front().modulus();
  std::vector<Fp> out(xs.size(), Fp(0, p));
  for (std::size_t i = 0; i < xs.size(); ++i) {
    Fp num(1, p);
    Fp den(1, p);
    for (std::size_t j = 0; j < xs.size(); ++j) {
      if (j == i) continue;
      if (xs[i] == xs[j]) throw DuplicateAbscissa();
      num *= target - xs[j];
      den *= xs[i] - xs[j];
    }
    out[i] = num / den;
  }
  return out;
}

Polynomial lagrange_interpolate(std::span<const Point> points) {
  if (points.empty()) throw std::invalid_argument("lagrange_interpolate: no points");
  const std::uint64_t p = points.front().x.modulus();
  Polynomial acc(p);
  for (std::size_t i = 0; i < points.size(); ++i) {
    Polynomial basis(p, {Fp(1, p)});
    Fp den(1, p);
    for (std::size_t j = 0; j < points.size(); ++j) {
      if (j == i) continue;
      if (points[i].x == points[j].x) throw DuplicateAbscissa();
      basis = basis * Polynomial(p, {-points[j].x, Fp(1, p)});
      den *= points[i].x - points[j].x;
    }
    acc = acc + basis.scaled(points[i].y / den);
  }
  return acc;
}

}  // namespace qmpc
