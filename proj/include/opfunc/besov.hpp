#ifndef OPFUNC_BESOV_HPP
#define OPFUNC_BESOV_HPP

#include <utility>
#include <vector>

#include "opfunc/trig_poly.hpp"

namespace opfunc {

/// Smooth dyadic window w with supp w in [1/2, 2] and w(t) = 1 - w(t/2) on
/// [1, 2], built from phi(x) = e^{-1/x} / (e^{-1/x} + e^{-1/(1-x)}).
class WindowFunction {
 public:
  double operator()(double t) const;
};

WindowFunction make_window();

/// Multiplier of the n-th Littlewood-Paley piece at frequency radius r = |j|.
/// For n >= 1 this is w(r / 2^n). The n = 0 multiplier is 1 on |j| <= 1 and
/// w(r) on 1 < r < 2, so the multipliers sum to one at every lattice point.
double lp_multiplier(int n, double radius);

struct LPPiece {
  int n;
  TrigPoly f;
};

/// Nonzero dyadic pieces f_n = f * W_n in increasing n; sum f_n = f.
struct LPDecomposition {
  std::vector<LPPiece> pieces;
  TrigPoly sum() const;
};

LPDecomposition lp_decompose(const TrigPoly& f);

/// sum_n 2^{s n} sup |f_n|, s in {1, 2}. Every piece is sampled on the grid of
/// the full polynomial, default_grid(f).
double besov_norm(const TrigPoly& f, int s = 1);

/// sum |c_j|.
double fourier_l1(const TrigPoly& f);

/// sum_{n >= 1} (2^{n+1} + 1) sup |f_{n-1}|, a bound for the projective tensor
/// norm of f in C(T) ^(x) C(T). d = 2.
double tensor_norm_bound(const TrigPoly& f);

/// Keeps only coefficients with every index >= 0. d in {2, 3}.
TrigPoly analytic_restrict(const TrigPoly& f);

/// Constant in sum |c_j| <= kL1BesovConstant * besov_norm(f, 1).
inline constexpr double kL1BesovConstant = 5.0;

/// Sup and Besov norms of a polynomial whose coefficients live in a fixed box,
/// kept up to date under single-coefficient changes in O(grid) work each.
/// Grid sizes follow default_grid of a polynomial that fills the box, so the
/// values agree with besov_norm / sup_norm whenever the box is tight.
class NormTracker {
 public:
  NormTracker(const TrigPoly& f, const MultiIndex& box_lo, const MultiIndex& box_hi);

  void add(const MultiIndex& j, cd delta);
  /// (sup, besov) after add(j, delta), without applying it.
  std::pair<double, double> peek(const MultiIndex& j, cd delta) const;
  double sup() const;
  double besov() const;
  const TrigPoly& poly() const { return f_; }

 private:
  VectorXcd phase(const MultiIndex& j) const;

  MultiIndex grid_{1, 1, 1};
  TrigPoly f_;
  VectorXcd values_;
  std::vector<int> piece_n_;
  std::vector<VectorXcd> piece_values_;
};

}  // namespace opfunc

#endif  // OPFUNC_BESOV_HPP
