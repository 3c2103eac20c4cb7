#include "opfunc/funcalc.hpp"

#include <cmath>
#include <sstream>

namespace opfunc {

namespace {

std::string describe_key(cd z) {
  std::ostringstream os;
  os.precision(17);
  if (z.imag() == 0)
    os << z.real();
  else
    os << z.real() << (z.imag() < 0 ? "-" : "+") << std::abs(z.imag()) << "i";
  return os.str();
}

bool near(cd a, cd b) { return std::abs(a - b) <= grid_key_tolerance(b); }

void require_below_pi(const Hermitian& h, const char* name) {
  const double op = operator_norm<double>(h.matrix());
  if (!(op < kPi))
    throw DomainError(std::string("Fourier route needs ||") + name + "|| < pi, got " + std::to_string(op));
}

/// e^{ijA} for j in [lo, hi] by repeated products of e^{iA} and its adjoint.
std::vector<MatrixXcd> exp_powers(const MatrixXcd& e, int lo, int hi) {
  std::vector<MatrixXcd> out(static_cast<std::size_t>(hi - lo + 1));
  const Index n = e.rows();
  MatrixXcd up = MatrixXcd::Identity(n, n);
  const MatrixXcd inv = e.adjoint();
  MatrixXcd down = MatrixXcd::Identity(n, n);
  for (int j = 0; j <= std::max(hi, -lo); ++j) {
    if (j >= lo && j <= hi) out[static_cast<std::size_t>(j - lo)] = up;
    if (-j >= lo && -j <= hi) out[static_cast<std::size_t>(-j - lo)] = down;
    up = up * e;
    down = down * inv;
  }
  return out;
}

}  // namespace

double grid_key_tolerance(cd key) { return 1e-8 * (1 + std::abs(key)); }

// Grid functions --------------------------------------------------------------

void GridFunction2::set(cd x, cd y, cd value) {
  for (auto& [kx, ky, v] : entries_)
    if (near(x, kx) && near(y, ky)) {
      v = value;
      return;
    }
  entries_.emplace_back(x, y, value);
}

std::optional<cd> GridFunction2::find(cd x, cd y, double tol) const {
  for (const auto& [kx, ky, v] : entries_)
    if (std::abs(x - kx) <= tol && std::abs(y - ky) <= tol) return v;
  return std::nullopt;
}

void GridFunction3::set(cd x, cd y, cd z, cd value) {
  for (auto& [kx, ky, kz, v] : entries_)
    if (near(x, kx) && near(y, ky) && near(z, kz)) {
      v = value;
      return;
    }
  entries_.emplace_back(x, y, z, value);
}

std::optional<cd> GridFunction3::find(cd x, cd y, cd z, double tol) const {
  for (const auto& [kx, ky, kz, v] : entries_)
    if (std::abs(x - kx) <= tol && std::abs(y - ky) <= tol && std::abs(z - kz) <= tol) return v;
  return std::nullopt;
}

// Spectral route --------------------------------------------------------------

MatrixXcd spectral_sandwich(const MatrixXcd& values, const Spectrum& a, const Spectrum& b) {
  const MatrixXcd overlap = a.eigenvectors.adjoint() * b.eigenvectors;
  return a.eigenvectors * values.cwiseProduct(overlap) * b.eigenvectors.adjoint();
}

MatrixXcd spectral_sandwich(const std::vector<MatrixXcd>& values, const Spectrum& a, const Spectrum& b,
                            const Spectrum& c) {
  const MatrixXcd ab = a.eigenvectors.adjoint() * b.eigenvectors;
  const MatrixXcd bc = b.eigenvectors.adjoint() * c.eigenvectors;
  MatrixXcd mid(a.dim(), c.dim());
  for (Index k = 0; k < c.dim(); ++k)
    mid.col(k) = values[static_cast<std::size_t>(k)].cwiseProduct(ab) * bc.col(k);
  return a.eigenvectors * mid * c.eigenvectors.adjoint();
}

MatrixXcd eval_pair_spectral(const GridFunction2& f, const Spectrum& a, const Spectrum& b) {
  if (a.dim() != b.dim()) throw DomainError("operators must have equal dimension");
  std::vector<std::vector<cd>> table(a.clusters.size(), std::vector<cd>(b.clusters.size()));
  for (std::size_t i = 0; i < a.clusters.size(); ++i)
    for (std::size_t j = 0; j < b.clusters.size(); ++j) {
      const cd x = a.cluster_values[i], y = b.cluster_values[j];
      const auto v = f.find(x, y, std::max(grid_key_tolerance(x), grid_key_tolerance(y)));
      if (!v)
        throw DomainError("grid function undefined at (" + describe_key(x) + ", " + describe_key(y) + ")");
      table[i][j] = *v;
    }
  MatrixXcd values(a.dim(), b.dim());
  for (std::size_t i = 0; i < a.clusters.size(); ++i)
    for (Index r : a.clusters[i])
      for (std::size_t j = 0; j < b.clusters.size(); ++j)
        for (Index s : b.clusters[j]) values(r, s) = table[i][j];
  return spectral_sandwich(values, a, b);
}

MatrixXcd eval_pair_spectral(const GridFunction2& f, const Hermitian& a, const Hermitian& b) {
  return eval_pair_spectral(f, eig_hermitian(a), eig_hermitian(b));
}

MatrixXcd eval_triple_spectral(const GridFunction3& f, const Spectrum& a, const Spectrum& b, const Spectrum& c) {
  if (a.dim() != b.dim() || b.dim() != c.dim()) throw DomainError("operators must have equal dimension");
  std::vector<MatrixXcd> values(static_cast<std::size_t>(c.dim()), MatrixXcd(a.dim(), b.dim()));
  for (std::size_t i = 0; i < a.clusters.size(); ++i)
    for (std::size_t j = 0; j < b.clusters.size(); ++j)
      for (std::size_t k = 0; k < c.clusters.size(); ++k) {
        const cd x = a.cluster_values[i], y = b.cluster_values[j], z = c.cluster_values[k];
        const double tol = std::max({grid_key_tolerance(x), grid_key_tolerance(y), grid_key_tolerance(z)});
        const auto v = f.find(x, y, z, tol);
        if (!v)
          throw DomainError("grid function undefined at (" + describe_key(x) + ", " + describe_key(y) + ", " +
                            describe_key(z) + ")");
        for (Index r : a.clusters[i])
          for (Index s : b.clusters[j])
            for (Index t : c.clusters[k]) values[static_cast<std::size_t>(t)](r, s) = *v;
      }
  return spectral_sandwich(values, a, b, c);
}

MatrixXcd eval_triple_spectral(const GridFunction3& f, const Hermitian& a, const Hermitian& b,
                               const Hermitian& c) {
  return eval_triple_spectral(f, eig_hermitian(a), eig_hermitian(b), eig_hermitian(c));
}

VectorXd spectral_angles(const Spectrum& s, bool unitary, double dilation) {
  const VectorXcd v = s.clustered_eigenvalues();
  VectorXd x(v.size());
  for (Index k = 0; k < v.size(); ++k) x(k) = unitary ? std::arg(v(k)) : dilation * v(k).real();
  return x;
}

MatrixXcd eval_pair_trig(const TrigPoly& f, const Spectrum& a, const Spectrum& b, bool unitary,
                         double dilation) {
  if (f.dim() != 2) throw DomainError("pair calculus needs a d = 2 polynomial");
  if (a.dim() != b.dim()) throw DomainError("operators must have equal dimension");
  const MatrixXcd values =
      evaluate_on_product(f, spectral_angles(a, unitary, dilation), spectral_angles(b, unitary, dilation));
  return spectral_sandwich(values, a, b);
}

MatrixXcd eval_triple_trig(const TrigPoly& f, const Spectrum& a, const Spectrum& b, const Spectrum& c,
                           double dilation) {
  if (f.dim() != 3) throw DomainError("triple calculus needs a d = 3 polynomial");
  if (a.dim() != b.dim() || b.dim() != c.dim()) throw DomainError("operators must have equal dimension");
  const auto values = evaluate_on_product(f, spectral_angles(a, false, dilation), spectral_angles(b, false, dilation),
                                          spectral_angles(c, false, dilation));
  return spectral_sandwich(values, a, b, c);
}

// Fourier and power routes ----------------------------------------------------

MatrixXcd eval_pair_fourier(const TrigPoly& f, const Hermitian& a, const Hermitian& b) {
  if (f.dim() != 2) throw DomainError("pair calculus needs a d = 2 polynomial");
  if (a.dim() != b.dim()) throw DomainError("operators must have equal dimension");
  require_below_pi(a, "A");
  require_below_pi(b, "B");
  const Index n = a.dim();
  if (f.is_zero()) return MatrixXcd::Zero(n, n);
  const auto lo = f.lower(), hi = f.upper();
  const auto ea = exp_powers(exp_i(eig_hermitian(a)), lo[0], hi[0]);
  const auto eb = exp_powers(exp_i(eig_hermitian(b)), lo[1], hi[1]);
  MatrixXcd out = MatrixXcd::Zero(n, n);
  for (int j = lo[0]; j <= hi[0]; ++j) {
    MatrixXcd inner = MatrixXcd::Zero(n, n);
    bool any = false;
    for (int k = lo[1]; k <= hi[1]; ++k) {
      const cd c = f.coeff({j, k, 0});
      if (c == cd(0)) continue;
      inner += c * eb[static_cast<std::size_t>(k - lo[1])];
      any = true;
    }
    if (any) out += ea[static_cast<std::size_t>(j - lo[0])] * inner;
  }
  return out;
}

MatrixXcd eval_unitary_pair(const TrigPoly& f, const Unitary& u, const Unitary& v) {
  if (f.dim() != 2) throw DomainError("pair calculus needs a d = 2 polynomial");
  if (u.dim() != v.dim()) throw DomainError("operators must have equal dimension");
  const Index n = u.dim();
  if (f.is_zero()) return MatrixXcd::Zero(n, n);
  const auto lo = f.lower(), hi = f.upper();
  const auto pu = exp_powers(u.matrix(), lo[0], hi[0]);
  const auto pv = exp_powers(v.matrix(), lo[1], hi[1]);
  MatrixXcd out = MatrixXcd::Zero(n, n);
  for (int j = lo[0]; j <= hi[0]; ++j) {
    MatrixXcd inner = MatrixXcd::Zero(n, n);
    bool any = false;
    for (int k = lo[1]; k <= hi[1]; ++k) {
      const cd c = f.coeff({j, k, 0});
      if (c == cd(0)) continue;
      inner += c * pv[static_cast<std::size_t>(k - lo[1])];
      any = true;
    }
    if (any) out += pu[static_cast<std::size_t>(j - lo[0])] * inner;
  }
  return out;
}

MatrixXcd eval_triple_fourier(const TrigPoly& f, const Hermitian& a, const Hermitian& b, const Hermitian& c) {
  if (f.dim() != 3) throw DomainError("triple calculus needs a d = 3 polynomial");
  if (a.dim() != b.dim() || b.dim() != c.dim()) throw DomainError("operators must have equal dimension");
  require_below_pi(a, "A");
  require_below_pi(b, "B");
  require_below_pi(c, "C");
  const Index n = a.dim();
  if (f.is_zero()) return MatrixXcd::Zero(n, n);
  const auto lo = f.lower(), hi = f.upper();
  const auto ea = exp_powers(exp_i(eig_hermitian(a)), lo[0], hi[0]);
  const auto eb = exp_powers(exp_i(eig_hermitian(b)), lo[1], hi[1]);
  const auto ec = exp_powers(exp_i(eig_hermitian(c)), lo[2], hi[2]);
  MatrixXcd out = MatrixXcd::Zero(n, n);
  for (int j = lo[0]; j <= hi[0]; ++j) {
    MatrixXcd middle = MatrixXcd::Zero(n, n);
    bool any_k = false;
    for (int k = lo[1]; k <= hi[1]; ++k) {
      MatrixXcd inner = MatrixXcd::Zero(n, n);
      bool any_l = false;
      for (int l = lo[2]; l <= hi[2]; ++l) {
        const cd coef = f.coeff({j, k, l});
        if (coef == cd(0)) continue;
        inner += coef * ec[static_cast<std::size_t>(l - lo[2])];
        any_l = true;
      }
      if (!any_l) continue;
      middle += eb[static_cast<std::size_t>(k - lo[1])] * inner;
      any_k = true;
    }
    if (any_k) out += ea[static_cast<std::size_t>(j - lo[0])] * middle;
  }
  return out;
}

// Transforms -------------------------------------------------------------------

ScaledPair scale_pair(const DilatedTrigPoly& f0, const Hermitian& a0, const Hermitian& b0, double sigma) {
  if (!(sigma > 0)) throw DomainError("scale_pair needs sigma > 0");
  return {DilatedTrigPoly{f0.base, f0.dilation * sigma}, Hermitian(a0.matrix() / sigma),
          Hermitian(b0.matrix() / sigma)};
}

ScaledPair scale_pair(const TrigPoly& f0, const Hermitian& a0, const Hermitian& b0, double sigma) {
  return scale_pair(DilatedTrigPoly{f0, 1.0}, a0, b0, sigma);
}

GridFunction2 scale_keys(const GridFunction2& f, double sigma) {
  if (!(sigma > 0)) throw DomainError("scale_keys needs sigma > 0");
  GridFunction2 out;
  f.for_each([&](cd x, cd y, cd v) { out.set(x / sigma, y / sigma, v); });
  return out;
}

MatrixXcd eval_pair_spectral(const DilatedTrigPoly& f, const Hermitian& a, const Hermitian& b) {
  return eval_pair_trig(f.base, eig_hermitian(a), eig_hermitian(b), false, f.dilation);
}

TrigPoly modulate(const TrigPoly& f, int n1, int n2) {
  if (f.dim() != 2) throw DomainError("modulate needs a d = 2 polynomial");
  TrigPoly g(2);
  for (const auto& [j, c] : f.coefficients()) g.set({j[0] + n1, j[1] + n2, 0}, c);
  return g;
}

}  // namespace opfunc
