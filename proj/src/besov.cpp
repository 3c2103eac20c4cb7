#include "opfunc/besov.hpp"

#include <algorithm>
#include <cmath>

namespace opfunc {

namespace {

// Smooth step: 0 for x <= 0, 1 for x >= 1.
double smooth_step(double x) {
  if (x <= 0) return 0;
  if (x >= 1) return 1;
  const double e = 1 / x - 1 / (1 - x);
  if (e > 700) return 0;
  if (e < -700) return 1;
  return 1 / (1 + std::exp(e));
}

double radius(const MultiIndex& j) {
  return std::sqrt(static_cast<double>(j[0]) * j[0] + static_cast<double>(j[1]) * j[1] +
                   static_cast<double>(j[2]) * j[2]);
}

bool within_unit(const MultiIndex& j) {
  return static_cast<long long>(j[0]) * j[0] + static_cast<long long>(j[1]) * j[1] +
             static_cast<long long>(j[2]) * j[2] <=
         1;
}

double multiplier(int n, const MultiIndex& j) {
  if (n == 0 && within_unit(j)) return 1;
  return lp_multiplier(n, radius(j));
}

// Largest n whose piece can be nonzero for frequencies up to radius r: the
// smallest n with 2^n >= r.
int top_piece(double r) {
  int n = 0;
  while (std::ldexp(1.0, n) < r) ++n;
  return n;
}

}  // namespace

double WindowFunction::operator()(double t) const {
  if (t <= 0.5 || t >= 2) return 0;
  if (t <= 1) return smooth_step(2 * t - 1);
  return 1 - smooth_step(t - 1);
}

WindowFunction make_window() { return WindowFunction{}; }

double lp_multiplier(int n, double r) {
  static const WindowFunction w;
  if (n < 0) return 0;
  if (n == 0) return r <= 1 ? 1.0 : w(r);
  return w(std::ldexp(r, -n));
}

TrigPoly LPDecomposition::sum() const {
  if (pieces.empty()) return TrigPoly(2);
  TrigPoly total(pieces.front().f.dim());
  for (const auto& p : pieces) total += p.f;
  return total;
}

LPDecomposition lp_decompose(const TrigPoly& f) {
  double rmax = 0;
  for (const auto& [j, c] : f.coefficients()) rmax = std::max(rmax, radius(j));
  const int top = top_piece(rmax);

  LPDecomposition lp;
  for (int n = 0; n <= top; ++n) {
    TrigPoly piece(f.dim());
    for (const auto& [j, c] : f.coefficients()) {
      const double m = multiplier(n, j);
      if (m != 0) piece.set(j, c * m);
    }
    if (!piece.is_zero()) lp.pieces.push_back({n, std::move(piece)});
  }
  return lp;
}

double besov_norm(const TrigPoly& f, int s) {
  if (s != 1 && s != 2) throw DomainError("besov_norm supports smoothness s = 1 or 2");
  const MultiIndex grid = default_grid(f);
  double total = 0;
  for (const auto& piece : lp_decompose(f).pieces)
    total += std::ldexp(grid_sup(piece.f, grid), s * piece.n);
  return total;
}

double fourier_l1(const TrigPoly& f) {
  double total = 0;
  for (const auto& [j, c] : f.coefficients()) total += std::abs(c);
  return total;
}

double tensor_norm_bound(const TrigPoly& f) {
  if (f.dim() != 2) throw DomainError("tensor_norm_bound needs a d = 2 polynomial");
  const MultiIndex grid = default_grid(f);
  double total = 0;
  for (const auto& piece : lp_decompose(f).pieces)
    total += (std::ldexp(1.0, piece.n + 2) + 1) * grid_sup(piece.f, grid);
  return total;
}

TrigPoly analytic_restrict(const TrigPoly& f) {
  if (f.dim() < 2) throw DomainError("analytic_restrict needs d = 2 or 3");
  TrigPoly out(f.dim());
  for (const auto& [j, c] : f.coefficients())
    if (j[0] >= 0 && j[1] >= 0 && j[2] >= 0) out.set(j, c);
  return out;
}

// NormTracker ------------------------------------------------------------------

NormTracker::NormTracker(const TrigPoly& f, const MultiIndex& box_lo, const MultiIndex& box_hi) : f_(f) {
  double rmax = 0;
  for (int i = 0; i < f.dim(); ++i) {
    const int deg = std::max(std::abs(box_lo[i]), std::abs(box_hi[i]));
    grid_[i] = 8 * std::max(box_hi[i] - box_lo[i], 1);
    rmax += static_cast<double>(deg) * deg;
  }
  rmax = std::sqrt(rmax);
  values_ = grid_values(f_, grid_);

  const auto lp = lp_decompose(f_);
  const int top = top_piece(rmax);
  for (int n = 0; n <= top; ++n) {
    piece_n_.push_back(n);
    auto it = std::find_if(lp.pieces.begin(), lp.pieces.end(), [n](const LPPiece& p) { return p.n == n; });
    piece_values_.push_back(it == lp.pieces.end() ? VectorXcd::Zero(values_.size()) : grid_values(it->f, grid_));
  }
}

VectorXcd NormTracker::phase(const MultiIndex& j) const {
  std::vector<cd> axis[3];
  for (int i = 0; i < 3; ++i) {
    const int n = grid_[i];
    axis[i].resize(static_cast<std::size_t>(n));
    for (int a = 0; a < n; ++a) {
      long long r = (static_cast<long long>(j[i]) * a) % n;
      if (r < 0) r += n;
      axis[i][a] = std::polar(1.0, 2 * kPi * static_cast<double>(r) / n);
    }
  }
  VectorXcd out(values_.size());
  Index at = 0;
  for (int a = 0; a < grid_[0]; ++a)
    for (int b = 0; b < grid_[1]; ++b)
      for (int c = 0; c < grid_[2]; ++c) out(at++) = axis[0][a] * axis[1][b] * axis[2][c];
  return out;
}

void NormTracker::add(const MultiIndex& j, cd delta) {
  if (delta == cd(0)) return;
  f_.add(j, delta);
  const VectorXcd ph = phase(j);
  values_ += delta * ph;
  for (std::size_t k = 0; k < piece_n_.size(); ++k) {
    const double m = multiplier(piece_n_[k], j);
    if (m != 0) piece_values_[k] += (delta * m) * ph;
  }
}

std::pair<double, double> NormTracker::peek(const MultiIndex& j, cd delta) const {
  if (delta == cd(0)) return {sup(), besov()};
  const VectorXcd ph = phase(j);
  const double s = values_.size() ? (values_ + delta * ph).cwiseAbs().maxCoeff() : 0.0;
  double b = 0;
  for (std::size_t k = 0; k < piece_n_.size(); ++k) {
    const double m = multiplier(piece_n_[k], j);
    const double top = m != 0 ? (piece_values_[k] + (delta * m) * ph).cwiseAbs().maxCoeff()
                              : piece_values_[k].cwiseAbs().maxCoeff();
    b += std::ldexp(top, piece_n_[k]);
  }
  return {s, b};
}

double NormTracker::sup() const { return values_.size() ? values_.cwiseAbs().maxCoeff() : 0.0; }

double NormTracker::besov() const {
  double total = 0;
  for (std::size_t k = 0; k < piece_n_.size(); ++k)
    total += std::ldexp(piece_values_[k].cwiseAbs().maxCoeff(), piece_n_[k]);
  return total;
}

}  // namespace opfunc
