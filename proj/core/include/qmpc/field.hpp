#pragma once

#include <cstdint>
#include <initializer_list>
#include <iosfwd>
#include <random>

#include "qmpc/errors.hpp"

namespace qmpc {

/// Count of field multiplications and inversions performed on the calling
/// thread. Additions are free under the cost convention used by RunMetrics.
std::uint64_t& field_op_counter();

/// Element of a prime field Z/pZ. The modulus travels with the value; mixing
/// two moduli throws FieldMismatch.
class Fp {
 public:
  Fp() = default;
  Fp(std::uint64_t value, std::uint64_t modulus) : v_(value % modulus), p_(modulus) {}

  std::uint64_t value() const { return v_; }
  std::uint64_t modulus() const { return p_; }
  bool is_zero() const { return v_ == 0; }

  Fp operator+(Fp o) const {
    check(o);
    std::uint64_t r = v_ + o.v_;
    return raw(r >= p_ ? r - p_ : r);
  }
  Fp operator-(Fp o) const {
    check(o);
    return raw(v_ >= o.v_ ? v_ - o.v_ : v_ + p_ - o.v_);
  }
  Fp operator-() const { return raw(v_ == 0 ? 0 : p_ - v_); }
  Fp operator*(Fp o) const {
    check(o);
    ++field_op_counter();
    return raw(static_cast<std::uint64_t>(
        static_cast<unsigned __int128>(v_) * o.v_ % p_));
  }
  Fp operator/(Fp o) const { return *this * o.inverse(); }
  Fp& operator+=(Fp o) { return *this = *this + o; }
  Fp& operator-=(Fp o) { return *this = *this - o; }
  Fp& operator*=(Fp o) { return *this = *this * o; }

  /// Multiplicative inverse via Fermat; throws DivisionByZero on zero.
  Fp inverse() const;
  Fp pow(std::uint64_t e) const;

  friend bool operator==(Fp a, Fp b) { return a.v_ == b.v_ && a.p_ == b.p_; }
  friend bool operator!=(Fp a, Fp b) { return !(a == b); }

 private:
  Fp raw(std::uint64_t v) const {
    Fp r;
    r.v_ = v;
    r.p_ = p_;
    return r;
  }
  void check(Fp o) const {
    if (o.p_ != p_) throw FieldMismatch();
  }

  std::uint64_t v_ = 0;
  std::uint64_t p_ = 0;
};

std::ostream& operator<<(std::ostream& os, Fp x);

enum class ArithKind { Add, Sub, Mul, Div };

/// Dispatching form of the four field operations.
Fp ff_arith(Fp a, Fp b, ArithKind kind);
inline Fp ff_inverse(Fp a) { return a.inverse(); }

bool is_prime(std::uint64_t n);

/// Deterministic random source. Streams are derived from a list of 64-bit
/// words (master seed, player, instance tag, ...) so that every protocol
/// participant owns an independent, order-insensitive stream.
class Rng {
 public:
  explicit Rng(std::initializer_list<std::uint64_t> words);
  explicit Rng(std::uint64_t seed) : Rng({seed}) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform integer in [0, bound) by rejection sampling.
  std::uint64_t below(std::uint64_t bound);
  double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 engine_;
};

/// The run-level field context.
class PrimeField {
 public:
  /// 2^61 - 1.
  static constexpr std::uint64_t kDefaultModulus = (std::uint64_t{1} << 61) - 1;

  explicit PrimeField(std::uint64_t p = kDefaultModulus);

  std::uint64_t modulus() const { return p_; }
  Fp element(std::uint64_t v) const { return Fp(v, p_); }
  Fp zero() const { return Fp(0, p_); }
  Fp one() const { return Fp(1, p_); }
  /// Element for a signed integer constant (reduced mod p).
  Fp from_signed(std::int64_t v) const;

  /// Uniform sample over [0, p).
  Fp sample(Rng& rng) const { return Fp(rng.below(p_), p_); }

  friend bool operator==(const PrimeField& a, const PrimeField& b) { return a.p_ == b.p_; }

 private:
  std::uint64_t p_;
};

inline Fp sample_uniform(const PrimeField& field, Rng& rng) { return field.sample(rng); }

}  // namespace qmpc
