#ifndef OPFUNC_TRIG_POLY_HPP
#define OPFUNC_TRIG_POLY_HPP

#include <array>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "opfunc/core.hpp"

namespace opfunc {

/// Multi-index into Z^d; components beyond the dimension are zero.
using MultiIndex = std::array<int, 3>;

/// Support set Lambda in Z^2: a finite list of points or a membership rule,
/// optionally cut off to the box max(|n1|, |n2|) <= cutoff.
class SupportMask {
 public:
  enum class Rule { Finite, Full, Quadrant, Sector };

  static SupportMask full(std::optional<int> cutoff = std::nullopt);
  static SupportMask quadrant(std::optional<int> cutoff = std::nullopt);
  /// Points whose angle atan2(n2, n1) lies in [lo, hi] (radians); the origin is included.
  static SupportMask sector(double lo, double hi, std::optional<int> cutoff = std::nullopt);
  static SupportMask finite(std::set<std::pair<int, int>> points);

  bool contains(int n1, int n2) const;
  Rule rule() const { return rule_; }
  const std::set<std::pair<int, int>>& points() const { return points_; }
  std::string describe() const;

 private:
  Rule rule_ = Rule::Full;
  std::set<std::pair<int, int>> points_;
  double lo_ = 0, hi_ = 0;
  std::optional<int> cutoff_;
};

/// Trigonometric polynomial f(zeta) = sum_j c_j zeta^j on T^d, d in {1, 2, 3},
/// stored sparsely. Exact zeros are never stored.
class TrigPoly {
 public:
  explicit TrigPoly(int dim = 2);

  static TrigPoly constant(int dim, cd c);
  static TrigPoly monomial(int dim, MultiIndex j, cd c = 1.0);

  int dim() const { return dim_; }
  cd coeff(const MultiIndex& j) const;
  void set(const MultiIndex& j, cd value);
  void add(const MultiIndex& j, cd value) { set(j, coeff(j) + value); }

  const std::map<MultiIndex, cd>& coefficients() const { return coeffs_; }
  std::size_t size() const { return coeffs_.size(); }
  bool is_zero() const { return coeffs_.empty(); }

  /// max |j_i| over stored coefficients (0 for constants and the zero polynomial).
  int degree() const;
  /// Per-dimension bounds of the stored coefficients (zeros if empty).
  MultiIndex lower() const;
  MultiIndex upper() const;
  /// Per-dimension degree max(|lower_i|, |upper_i|).
  MultiIndex degrees() const;

  /// f(e^{i x_1}, ..., e^{i x_d}); unused angles are ignored.
  cd evaluate(double x, double y = 0, double z = 0) const;

  /// Hermitian-symmetric coefficients c_{-j} = conj(c_j) within tol.
  bool is_real_valued(double tol = 0) const;
  /// All indices nonnegative in every component.
  bool is_analytic() const;

  const std::optional<SupportMask>& support_mask() const { return mask_; }
  /// Attaches a support mask (d = 2 only); existing coefficients must lie in it.
  void set_support_mask(std::optional<SupportMask> mask);

  TrigPoly& operator*=(cd s);
  TrigPoly& operator+=(const TrigPoly& other);
  friend TrigPoly operator*(cd s, TrigPoly f) { return f *= s; }
  friend TrigPoly operator+(TrigPoly a, const TrigPoly& b) { return a += b; }
  friend TrigPoly operator-(TrigPoly a, const TrigPoly& b) { return a += (-1.0) * b; }

 private:
  void check_index(const MultiIndex& j) const;

  int dim_;
  std::map<MultiIndex, cd> coeffs_;
  std::optional<SupportMask> mask_;
};

// Grid evaluation -----------------------------------------------------------

/// Samples per dimension used for sup norms: 8 max(upper_i - lower_i, 1).
/// Depending only on the width of the coefficient box keeps sampled sup norms
/// invariant under index shifts.
MultiIndex default_grid(const TrigPoly& f);

/// Values on the uniform grid x_a = 2 pi a / N_i, flattened with the first
/// dimension slowest.
VectorXcd grid_values(const TrigPoly& f, const MultiIndex& grid);

/// max |f| over grid_values(f, grid).
double grid_sup(const TrigPoly& f, const MultiIndex& grid);

/// Sup norm on the default grid (an under-estimate of the true sup by a
/// bounded factor).
double sup_norm(const TrigPoly& f);

/// F(a, b) = f(x_a, y_b) for d = 2.
MatrixXcd evaluate_on_product(const TrigPoly& f, const VectorXd& x, const VectorXd& y);

/// F[c](a, b) = f(x_a, y_b, z_c) for d = 3.
std::vector<MatrixXcd> evaluate_on_product(const TrigPoly& f, const VectorXd& x, const VectorXd& y,
                                           const VectorXd& z);

// Exchange format --------------------------------------------------------------
//
//   d <dim> degree <box>
//   j [k [l]] re im
//
// one line per nonzero coefficient, |indices| <= box, 17 significant digits.

void write_trig_poly(std::ostream& os, const TrigPoly& f);
TrigPoly read_trig_poly(std::istream& is);
TrigPoly load_trig_poly(const std::string& path);
void save_trig_poly(const std::string& path, const TrigPoly& f);

}  // namespace opfunc

#endif  // OPFUNC_TRIG_POLY_HPP
