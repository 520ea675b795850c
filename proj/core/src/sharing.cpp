#include "qmpc/sharing.hpp"

#include <string>

namespace qmpc {

ShareSet shamir_deal(const PrimeField& field, Fp secret, int t, std::size_t recipients, Rng& rng,
                     std::uint32_t dealer, std::uint64_t tag) {
  if (recipients < static_cast<std::size_t>(3 * t + 1)) {
    throw TooFewRecipients("shamir_deal: " + std::to_string(recipients) +
                           " recipients cannot carry threshold " + std::to_string(t));
  }
  if (recipients >= field.modulus()) {
    throw TooFewRecipients("shamir_deal: field too small for distinct abscissas");
  }
  const Polynomial f = Polynomial::random_with_constant(field, secret, t, rng);
  ShareSet out;
  out.modulus = field.modulus();
  out.threshold = t;
  out.dealer = dealer;
  out.tag = tag;
  out.shares.reserve(recipients);
  for (std::size_t i = 0; i < recipients; ++i) out.shares.emplace_back(f.eval(abscissa(field, i)));
  return out;
}

Fp shamir_reconstruct(const ShareSet& set) {
  const std::size_t slots = set.shares.size();
  if (slots < static_cast<std::size_t>(3 * set.threshold + 1)) {
    throw DecodingFailure("shamir_reconstruct: fewer than 3t + 1 share slots");
  }
  std::vector<Point> pts;
  pts.reserve(slots);
  for (std::size_t i = 0; i < slots; ++i) {
    if (set.shares[i]) pts.push_back({Fp(i + 1, set.modulus), *set.shares[i]});
  }
  // Erasures plus errors beyond t cannot be corrected; BW reports it only
  // when detectable, so the erasure budget is checked first.
  if (slots - pts.size() > static_cast<std::size_t>(set.threshold)) {
    throw DecodingFailure("shamir_reconstruct: more than t shares missing");
  }
  return berlekamp_welch(pts, set.threshold).coefficient(0);
}

ShareSet add_shares(const ShareSet& a, const ShareSet& b) {
  if (a.modulus != b.modulus) throw FieldMismatch();
  if (a.threshold != b.threshold || a.shares.size() != b.shares.size()) {
    throw MismatchedRoleSets();
  }
  ShareSet out = a;
  out.tag = 0;
  for (std::size_t i = 0; i < a.shares.size(); ++i) {
    if (a.shares[i] && b.shares[i]) {
      out.shares[i] = *a.shares[i] + *b.shares[i];
    } else {
      out.shares[i].reset();
    }
  }
  return out;
}

std::optional<std::vector<Fp>> solve_linear(std::vector<Fp> a, std::vector<Fp> b, std::size_t rows,
                                            std::size_t cols) {
  const std::uint64_t p = b.empty() ? 0 : b.front().modulus();
  std::vector<std::size_t> pivot_col;
  std::size_t r = 0;
  for (std::size_t c = 0; c < cols && r < rows; ++c) {
    std::size_t sel = r;
    while (sel < rows && a[sel * cols + c].is_zero()) ++sel;
    if (sel == rows) continue;
    if (sel != r) {
      for (std::size_t k = 0; k < cols; ++k) std::swap(a[sel * cols + k], a[r * cols + k]);
      std::swap(b[sel], b[r]);
    }
    const Fp inv = a[r * cols + c].inverse();
    for (std::size_t k = c; k < cols; ++k) a[r * cols + k] *= inv;
    b[r] *= inv;
    for (std::size_t i = 0; i < rows; ++i) {
      if (i == r) continue;
      const Fp f = a[i * cols + c];
      if (f.is_zero()) continue;
      for (std::size_t k = c; k < cols; ++k) a[i * cols + k] -= f * a[r * cols + k];
      b[i] -= f * b[r];
    }
    pivot_col.push_back(c);
    ++r;
  }
  for (std::size_t i = r; i < rows; ++i) {
    if (!b[i].is_zero()) return std::nullopt;
  }
  std::vector<Fp> x(cols, Fp(0, p));
  for (std::size_t i = 0; i < r; ++i) x[pivot_col[i]] = b[i];
  return x;
}

namespace {

// Returns the interpolant of the first degree + 1 points if every point lies
// on it. This is the common, error-free case.
std::optional<Polynomial> clean_fit(std::span<const Point> pts, int degree) {
  const auto head = pts.first(static_cast<std::size_t>(degree) + 1);
  Polynomial f = lagrange_interpolate(head);
  for (std::size_t i = head.size(); i < pts.size(); ++i) {
    if (f.eval(pts[i].x) != pts[i].y) return std::nullopt;
  }
  return f;
}

}  // namespace

Polynomial berlekamp_welch(std::span<const Point> pts, int degree) {
  const std::size_t k = pts.size();
  if (degree < 0 || k < static_cast<std::size_t>(degree) + 1) {
    throw DecodingFailure("berlekamp_welch: not enough points");
  }
  if (auto f = clean_fit(pts, degree)) return *f;

  const std::uint64_t p = pts.front().x.modulus();
  const std::size_t d = static_cast<std::size_t>(degree);
  const std::size_t e = (k - d - 1) / 2;
  if (e == 0) throw DecodingFailure("berlekamp_welch: points inconsistent, no error budget");

  // Unknowns: E_0..E_{e-1} (E monic of degree e), Q_0..Q_{e+d}.
  const std::size_t cols = e + (e + d + 1);
  std::vector<Fp> a(k * cols, Fp(0, p));
  std::vector<Fp> b(k, Fp(0, p));
  for (std::size_t i = 0; i < k; ++i) {
    const Fp x = pts[i].x;
    const Fp y = pts[i].y;
    Fp xp(1, p);
    for (std::size_t l = 0; l < e + d + 1; ++l) {
      if (l < e) a[i * cols + l] = -(y * xp);
      a[i * cols + e + l] = xp;
      if (l == e) b[i] = y * xp;
      xp *= x;
    }
  }
  auto sol = solve_linear(std::move(a), std::move(b), k, cols);
  if (!sol) throw DecodingFailure("berlekamp_welch: too many errors");

  std::vector<Fp> ec(sol->begin(), sol->begin() + static_cast<std::ptrdiff_t>(e));
  ec.emplace_back(1, p);
  std::vector<Fp> qc(sol->begin() + static_cast<std::ptrdiff_t>(e), sol->end());
  const Polynomial epoly(p, std::move(ec));
  const Polynomial qpoly(p, std::move(qc));
  auto [f, rem] = qpoly.divmod(epoly);
  if (!rem.is_zero() || f.degree() > degree) {
    throw DecodingFailure("berlekamp_welch: too many errors");
  }
  std::size_t agree = 0;
  for (const Point& pt : pts) agree += f.eval(pt.x) == pt.y ? 1 : 0;
  if (agree + e < k) throw DecodingFailure("berlekamp_welch: too many errors");
  return f;
}

ReedSolomonCode::ReedSolomonCode(std::vector<Fp> abscissas, int degree)
    : xs_(std::move(abscissas)), degree_(degree) {
  const std::size_t n = xs_.size();
  if (degree < 0 || n < static_cast<std::size_t>(degree) + 1) {
    throw DecodingFailure("ReedSolomonCode: length shorter than dimension");
  }
  rows_ = n - static_cast<std::size_t>(degree) - 1;
  const std::uint64_t p = xs_.front().modulus();
  std::vector<Fp> v(n, Fp(1, p));
  for (std::size_t u = 0; u < n; ++u) {
    Fp prod(1, p);
    for (std::size_t w = 0; w < n; ++w) {
      if (w == u) continue;
      if (xs_[u] == xs_[w]) throw DuplicateAbscissa();
      prod *= xs_[u] - xs_[w];
    }
    v[u] = prod.inverse();
  }
  h_.assign(rows_ * n, Fp(0, p));
  for (std::size_t u = 0; u < n; ++u) {
    Fp term = v[u];
    for (std::size_t j = 0; j < rows_; ++j) {
      h_[j * n + u] = term;
      term *= xs_[u];
    }
  }
}

std::vector<Fp> ReedSolomonCode::syndrome(std::span<const Fp> word) const {
  const std::size_t n = xs_.size();
  const std::uint64_t p = xs_.front().modulus();
  std::vector<Fp> s(rows_, Fp(0, p));
  for (std::size_t j = 0; j < rows_; ++j) {
    for (std::size_t u = 0; u < n; ++u) s[j] += h_[j * n + u] * word[u];
  }
  return s;
}

std::vector<Fp> ReedSolomonCode::error_from_syndrome(std::span<const Fp> syn) const {
  const std::size_t n = xs_.size();
  const std::uint64_t p = xs_.front().modulus();
  std::vector<Fp> e(n, Fp(0, p));
  bool nonzero = false;
  for (const Fp& s : syn) nonzero = nonzero || !s.is_zero();
  if (!nonzero) return e;

  // Any word y with H y = syndrome: supported on the first `rows_` positions,
  // whose parity columns form an invertible (scaled Vandermonde) block.
  std::vector<Fp> a(rows_ * rows_, Fp(0, p));
  for (std::size_t j = 0; j < rows_; ++j) {
    for (std::size_t u = 0; u < rows_; ++u) a[j * rows_ + u] = h_[j * n + u];
  }
  auto y_head = solve_linear(std::move(a), std::vector<Fp>(syn.begin(), syn.end()), rows_, rows_);
  if (!y_head) throw DecodingFailure("error_from_syndrome: singular parity block");
  std::vector<Point> pts;
  pts.reserve(n);
  for (std::size_t u = 0; u < n; ++u) {
    pts.push_back({xs_[u], u < rows_ ? (*y_head)[u] : Fp(0, p)});
  }
  // y = codeword + e, so decoding y isolates e.
  const Polynomial c = berlekamp_welch(pts, degree_);
  for (std::size_t u = 0; u < n; ++u) e[u] = pts[u].y - c.eval(xs_[u]);
  return e;
}

}  // namespace qmpc
