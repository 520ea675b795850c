#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "qmpc/polynomial.hpp"
#include "qmpc/simnet.hpp"

namespace qmpc {

/// One verifiable sharing to run: the dealing endpoint and the univariate
/// polynomial g (degree <= t) whose evaluations g(alpha_k) become the shares.
/// The secret is g(0).
struct VssInstance {
  std::uint32_t dealer = 0;
  Polynomial g{0};
};

/// Result of a batch of verifiable sharings, as seen by each member.
struct VssOutcome {
  /// shares[k][i]: member k's share of instance i. Zero when the dealer was
  /// disqualified.
  std::vector<std::vector<Fp>> shares;
  /// rows[k][i]: the t + 1 coefficients of member k's row polynomial.
  std::vector<std::vector<std::vector<Fp>>> rows;
  /// disqualified[k][i]: member k's view of whether instance i's dealer was
  /// disqualified. Agreement makes the views of good members identical.
  std::vector<std::vector<bool>> disqualified;
  /// Dealer-side state: the bivariate coefficients of every instance, as
  /// returned by symmetric_bivariate.
  std::vector<std::vector<Fp>> bivariate;
};

/// Symmetric bivariate VSS with complaint and accusation rounds. Every
/// instance is shared to `members` (channel endpoints; member k holds
/// abscissa k + 1) at degree t. Dealers need not be members. All instances
/// run in lockstep and each round carries one message per sender and
/// receiver. A dealer that is caught is disqualified and its sharing
/// defaults to zero.
VssOutcome vss_share_many(Channel& ch, const PrimeField& field, std::span<const std::uint32_t> members,
                          int t, const std::vector<VssInstance>& instances, std::uint64_t seed);

/// Upper bound on the rounds vss_share_many takes among `members` parties.
/// `outside_dealers` adds the relay rounds needed when some dealer is not a
/// member.
std::uint32_t vss_max_rounds(std::size_t members, int t, bool outside_dealers);

/// Symmetric bivariate polynomial F of degree t in each variable with
/// F(0, y) = g(y). coeffs[a * (t + 1) + b] multiplies x^a y^b.
std::vector<Fp> symmetric_bivariate(const PrimeField& field, const Polynomial& g, int t, Rng& rng);

/// Row polynomial F(alpha, y), lowest coefficient first.
std::vector<Fp> bivariate_row(const std::vector<Fp>& coeffs, int t, Fp alpha);

/// Horner evaluation of a coefficient vector.
Fp eval_coeffs(std::span<const Fp> coeffs, Fp x);

/// Every holder sends its shares to every recipient; recipients decode each
/// value with Berlekamp-Welch at degree t. Holder h carries abscissa h + 1.
/// Returns opened[r][i], nullopt where decoding failed.
std::vector<std::vector<std::optional<Fp>>> open_shares(
    Channel& ch, const PrimeField& field, std::span<const std::uint32_t> holders,
    std::span<const std::uint32_t> recipients, const std::vector<std::vector<Fp>>& shares, int t);

}  // namespace qmpc
