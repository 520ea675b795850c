#include "qmpc/field.hpp"

#include <array>
#include <ostream>
#include <vector>

namespace qmpc {

std::uint64_t& field_op_counter() {
  thread_local std::uint64_t counter = 0;
  return counter;
}

Fp Fp::pow(std::uint64_t e) const {
  Fp base = *this;
  Fp acc(1, p_);
  while (e != 0) {
    if (e & 1) acc *= base;
    base *= base;
    e >>= 1;
  }
  return acc;
}

Fp Fp::inverse() const {
  if (v_ == 0) throw DivisionByZero();
  // The exponentiation is charged as a single inversion.
  const std::uint64_t before = field_op_counter();
  Fp r = pow(p_ - 2);
  field_op_counter() = before + 1;
  return r;
}

std::ostream& operator<<(std::ostream& os, Fp x) { return os << x.value(); }

Fp ff_arith(Fp a, Fp b, ArithKind kind) {
  switch (kind) {
    case ArithKind::Add: return a + b;
    case ArithKind::Sub: return a - b;
    case ArithKind::Mul: return a * b;
    case ArithKind::Div: return a / b;
  }
  return a;
}

namespace {

std::uint64_t mulmod(std::uint64_t a, std::uint64_t b, std::uint64_t m) {
  return static_cast<std::uint64_t>(static_cast<unsigned __int128>(a) * b % m);
}

std::uint64_t powmod(std::uint64_t b, std::uint64_t e, std::uint64_t m) {
  std::uint64_t r = 1 % m;
  b %= m;
  while (e != 0) {
    if (e & 1) r = mulmod(r, b, m);
    b = mulmod(b, b, m);
    e >>= 1;
  }
  return r;
}

}  // namespace

bool is_prime(std::uint64_t n) {
  if (n < 2) return false;
  constexpr std::array<std::uint64_t, 12> bases{2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};
  for (std::uint64_t b : bases) {
    if (n % b == 0) return n == b;
  }
  std::uint64_t d = n - 1;
  int s = 0;
  while ((d & 1) == 0) {
    d >>= 1;
    ++s;
  }
  // These bases are a deterministic witness set for all 64-bit n.
  for (std::uint64_t a : bases) {
    std::uint64_t x = powmod(a, d, n);
    if (x == 1 || x == n - 1) continue;
    bool composite = true;
    for (int r = 1; r < s; ++r) {
      x = mulmod(x, x, n);
      if (x == n - 1) {
        composite = false;
        break;
      }
    }
    if (composite) return false;
  }
  return true;
}

Rng::Rng(std::initializer_list<std::uint64_t> words) {
  std::vector<std::uint32_t> seq;
  seq.reserve(words.size() * 2);
  for (std::uint64_t w : words) {
    seq.push_back(static_cast<std::uint32_t>(w));
    seq.push_back(static_cast<std::uint32_t>(w >> 32));
  }
  std::seed_seq ss(seq.begin(), seq.end());
  engine_.seed(ss);
}

std::uint64_t Rng::below(std::uint64_t bound) {
  // Largest multiple of bound representable in 64 bits.
  const std::uint64_t limit = bound == 0 ? 0 : (~std::uint64_t{0} / bound) * bound;
  for (;;) {
    const std::uint64_t x = engine_();
    if (x < limit) return x % bound;
  }
}

PrimeField::PrimeField(std::uint64_t p) : p_(p) {
  if (p >= (std::uint64_t{1} << 62)) throw ConfigError("field modulus must be below 2^62");
  if (!is_prime(p)) throw ConfigError("field modulus " + std::to_string(p) + " is not prime");
}

Fp PrimeField::from_signed(std::int64_t v) const {
  const auto p = static_cast<std::int64_t>(p_);
  std::int64_t r = v % p;
  if (r < 0) r += p;
  return Fp(static_cast<std::uint64_t>(r), p_);
}

}  // namespace qmpc
