#ifndef OPFUNC_FUNCALC_HPP
#define OPFUNC_FUNCALC_HPP

#include <optional>
#include <tuple>
#include <vector>

#include "opfunc/opcore.hpp"
#include "opfunc/trig_poly.hpp"

namespace opfunc {

// Functions of two and three noncommuting operators.
//
// Spectral route:  f(A, B)    = sum f(l, m) P_l Q_m
//                  f(A, B, C) = sum f(l, m, n) P_l Q_m R_n
// Fourier route:   f(A, B)    = sum c_jk e^{ijA} e^{ikB}        (||A||, ||B|| < pi)
// Unitary route:   f(U, V)    = sum c_jk U^j V^k
//
// Products are always taken in the written order; nothing is symmetrized.

/// Function values on a product of two finite spectra, keyed by cluster value.
class GridFunction2 {
 public:
  void set(cd x, cd y, cd value);
  std::optional<cd> find(cd x, cd y, double tol) const;
  std::size_t size() const { return entries_.size(); }

  template <typename F>
  void for_each(F&& visit) const {
    for (const auto& [x, y, v] : entries_) visit(x, y, v);
  }

  /// f sampled at every pair of cluster values of a and b.
  template <typename F>
  static GridFunction2 sample(F&& f, const Spectrum& a, const Spectrum& b) {
    GridFunction2 g;
    for (cd x : a.cluster_values)
      for (cd y : b.cluster_values) g.set(x, y, f(x, y));
    return g;
  }

 private:
  std::vector<std::tuple<cd, cd, cd>> entries_;
};

class GridFunction3 {
 public:
  void set(cd x, cd y, cd z, cd value);
  std::optional<cd> find(cd x, cd y, cd z, double tol) const;
  std::size_t size() const { return entries_.size(); }

  template <typename F>
  static GridFunction3 sample(F&& f, const Spectrum& a, const Spectrum& b, const Spectrum& c) {
    GridFunction3 g;
    for (cd x : a.cluster_values)
      for (cd y : b.cluster_values)
        for (cd z : c.cluster_values) g.set(x, y, z, f(x, y, z));
    return g;
  }

 private:
  std::vector<std::tuple<cd, cd, cd, cd>> entries_;
};

/// Key matching tolerance for grid lookups: 1e-8 (1 + |key|).
double grid_key_tolerance(cd key);

// Spectral kernels ------------------------------------------------------------

/// X (F o X^H Y) Y^H where F(a, b) is the function value for eigenvector a of
/// the first decomposition and eigenvector b of the second.
MatrixXcd spectral_sandwich(const MatrixXcd& values, const Spectrum& a, const Spectrum& b);

/// Triple version: values[c](a, b).
MatrixXcd spectral_sandwich(const std::vector<MatrixXcd>& values, const Spectrum& a, const Spectrum& b,
                            const Spectrum& c);

/// Evaluates any callable f(cd, cd) -> cd on cluster values.
template <typename F>
MatrixXcd eval_pair_spectral_fn(F&& f, const Spectrum& a, const Spectrum& b) {
  const VectorXcd xa = a.clustered_eigenvalues();
  const VectorXcd xb = b.clustered_eigenvalues();
  MatrixXcd values(xa.size(), xb.size());
  for (Index i = 0; i < xa.size(); ++i)
    for (Index j = 0; j < xb.size(); ++j) values(i, j) = f(xa(i), xb(j));
  return spectral_sandwich(values, a, b);
}

MatrixXcd eval_pair_spectral(const GridFunction2& f, const Spectrum& a, const Spectrum& b);
MatrixXcd eval_pair_spectral(const GridFunction2& f, const Hermitian& a, const Hermitian& b);

MatrixXcd eval_triple_spectral(const GridFunction3& f, const Spectrum& a, const Spectrum& b, const Spectrum& c);
MatrixXcd eval_triple_spectral(const GridFunction3& f, const Hermitian& a, const Hermitian& b,
                               const Hermitian& c);

/// Angles at which a trigonometric polynomial is evaluated for each
/// eigenvector: dilation * lambda for Hermitian spectra, arg(lambda) for unitary
/// ones (the dilation must be 1 there).
VectorXd spectral_angles(const Spectrum& s, bool unitary, double dilation = 1.0);

/// Spectral route for a trigonometric polynomial evaluated at cluster values.
MatrixXcd eval_pair_trig(const TrigPoly& f, const Spectrum& a, const Spectrum& b, bool unitary,
                         double dilation = 1.0);
MatrixXcd eval_triple_trig(const TrigPoly& f, const Spectrum& a, const Spectrum& b, const Spectrum& c,
                           double dilation = 1.0);

// Fourier and power routes ---------------------------------------------------

MatrixXcd eval_pair_fourier(const TrigPoly& f, const Hermitian& a, const Hermitian& b);
MatrixXcd eval_unitary_pair(const TrigPoly& f, const Unitary& u, const Unitary& v);
MatrixXcd eval_triple_fourier(const TrigPoly& f, const Hermitian& a, const Hermitian& b, const Hermitian& c);

// Transforms -------------------------------------------------------------------

/// A trigonometric polynomial evaluated at dilated arguments: g(x, y) = base(s x, s y).
struct DilatedTrigPoly {
  TrigPoly base;
  double dilation = 1.0;
  cd operator()(cd x, cd y) const { return base.evaluate(dilation * x.real(), dilation * y.real()); }
};

struct ScaledPair {
  DilatedTrigPoly f;
  Hermitian a;
  Hermitian b;
};

/// A = A0 / sigma, B = B0 / sigma and f(x, y) = f0(sigma x, sigma y), so that
/// f(A, B) = f0(A0, B0).
ScaledPair scale_pair(const DilatedTrigPoly& f0, const Hermitian& a0, const Hermitian& b0, double sigma);
ScaledPair scale_pair(const TrigPoly& f0, const Hermitian& a0, const Hermitian& b0, double sigma);

/// Grid keys divided by sigma (the same dilation for tabulated functions).
GridFunction2 scale_keys(const GridFunction2& f, double sigma);

MatrixXcd eval_pair_spectral(const DilatedTrigPoly& f, const Hermitian& a, const Hermitian& b);

/// g(z1, z2) = z1^{n1} z2^{n2} f(z1, z2). The result carries no support mask.
TrigPoly modulate(const TrigPoly& f, int n1, int n2);

}  // namespace opfunc

#endif  // OPFUNC_FUNCALC_HPP
