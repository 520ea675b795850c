#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "qmpc/field.hpp"
#include "qmpc/polynomial.hpp"

namespace qmpc {

/// Byzantine threshold of a committee of the given size: floor((q - 1) / 3).
inline int threshold_for(std::size_t committee_size) {
  return committee_size == 0 ? 0 : static_cast<int>((committee_size - 1) / 3);
}

/// Shamir shares of one secret. Slot i belongs to the committee member at
/// position i and holds the dealing polynomial evaluated at i + 1; an empty
/// slot is an erasure.
struct ShareSet {
  std::uint64_t modulus = 0;
  int threshold = 0;
  std::uint32_t dealer = 0;
  std::uint64_t tag = 0;
  std::vector<std::optional<Fp>> shares;
};

/// Deals a uniformly random degree-<=t sharing of secret to `recipients`
/// committee positions. Throws TooFewRecipients unless recipients >= 3t + 1.
ShareSet shamir_deal(const PrimeField& field, Fp secret, int t, std::size_t recipients, Rng& rng,
                     std::uint32_t dealer = 0, std::uint64_t tag = 0);

/// Error-correcting reconstruction: returns the secret as long as at most t
/// slots are erased or corrupted. Throws DecodingFailure otherwise (when the
/// corruption is detectable).
Fp shamir_reconstruct(const ShareSet& shares);

/// Share-wise sum; both sets must come from the same committee and threshold.
ShareSet add_shares(const ShareSet& a, const ShareSet& b);

/// Berlekamp-Welch decoding: the unique polynomial of degree <= degree that
/// agrees with all but at most (k - degree - 1) / 2 of the k points.
/// Throws DecodingFailure when no such polynomial exists.
Polynomial berlekamp_welch(std::span<const Point> points, int degree);

/// Generalized Reed-Solomon code: evaluations of polynomials of degree
/// <= degree at fixed distinct abscissas. Used for syndrome-based error
/// correction on shared codewords, where only the syndrome is ever opened.
class ReedSolomonCode {
 public:
  ReedSolomonCode(std::vector<Fp> abscissas, int degree);

  std::size_t length() const { return xs_.size(); }
  int degree() const { return degree_; }
  /// Number of parity checks, length - degree - 1.
  std::size_t redundancy() const { return rows_; }
  const std::vector<Fp>& abscissas() const { return xs_; }

  /// Parity-check row j, column u: v_u * x_u^j with v_u = 1 / prod_{w != u} (x_u - x_w).
  Fp parity(std::size_t row, std::size_t column) const { return h_[row * xs_.size() + column]; }

  std::vector<Fp> syndrome(std::span<const Fp> word) const;

  /// Error vector of weight <= (redundancy / 2) with the given syndrome.
  /// Throws DecodingFailure if none exists.
  std::vector<Fp> error_from_syndrome(std::span<const Fp> syndrome) const;

 private:
  std::vector<Fp> xs_;
  int degree_;
  std::size_t rows_;
  std::vector<Fp> h_;
};

/// Solves A x = b (A is rows x cols, row-major). Free variables are set to
/// zero. Returns nullopt when the system is inconsistent.
std::optional<std::vector<Fp>> solve_linear(std::vector<Fp> a, std::vector<Fp> b, std::size_t rows,
                                            std::size_t cols);

}  // namespace qmpc
